#pragma once

#include "charl/proposition.hpp"
#include "charl/trace.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace charl::ltl {

enum class Op { top, bottom, atom, negation, conjunction, disjunction, implication, next, eventually, globally, until };

/// Immutable LTL formula tree. Copies share structure; equality is structural.
class Formula {
public:
    static Formula top();
    static Formula bottom();
    static Formula atom(Proposition p);
    static Formula negation(Formula f);
    static Formula conjunction(Formula a, Formula b);
    static Formula disjunction(Formula a, Formula b);
    static Formula implication(Formula a, Formula b);
    /// `times` nested next operators; times == 0 returns f.
    static Formula next(Formula f, int times = 1);
    static Formula eventually(Formula f);
    static Formula globally(Formula f);
    static Formula until(Formula a, Formula b);

    Op op() const;
    Proposition proposition() const;
    /// Operand of unary operators, left operand of binary ones.
    const Formula& left() const;
    const Formula& right() const;

    std::size_t depth() const;
    bool operator==(const Formula& other) const;

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// Error with the byte offset into the parsed text.
class ParseError : public DataError {
public:
    ParseError(const std::string& message, std::size_t position);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Ambient (d, K) used to reject atoms that name no latent proposition.
struct Vocabulary {
    int num_variables;
    int num_categories;
};

/// Grammar, loosest binding first: U (right-assoc) < -> (right-assoc) < | < & < prefix
/// operators (G F X X^n !) < atoms, constants and parentheses. ASCII and the Unicode glyphs
/// (□ ◇ ○ ¬ ∧ ∨ → ⊤ ⊥) are both accepted; atoms are z_{d,c} or z_d_c.
Formula parse(std::string_view text, std::optional<Vocabulary> vocabulary = std::nullopt);

enum class Style { ascii, unicode };

/// Prints so that parse(print(f)) == f. Chains of next are printed as X^n.
std::string print(const Formula& f, Style style = Style::ascii);

/// A finite path over one-hot rows.
class TraceModel {
public:
    explicit TraceModel(SegmentView view) : view_(view) {}
    std::size_t length() const { return view_.length; }
    bool holds(Proposition p, std::size_t t) const;

private:
    SegmentView view_;
};

/// Finite-trace satisfaction at every position: next at the last position is false, G/F/U
/// quantify over the remaining suffix.
std::vector<char> satisfaction(const Formula& f, const TraceModel& trace);
bool evaluate(const Formula& f, const TraceModel& trace, std::size_t t);

struct RuleCounts {
    long n = 0;  ///< antecedent occurrences with t + lag in bounds
    long h = 0;  ///< of those, occurrences whose consequent holds
    bool operator==(const RuleCounts&) const = default;
};

/// Counts for G(src -> X^lag dst) (or X^lag !dst when negative) over t in [0, L-1-lag].
RuleCounts count_rule(const SegmentView& trace, Proposition src, Proposition dst, int lag, Polarity polarity);

/// Shape of a lagged implication rule.
struct RuleShape {
    Proposition src;
    Proposition dst;
    int lag = 1;
    Polarity polarity = Polarity::positive;
    bool operator==(const RuleShape&) const = default;
};

Formula rule_formula(const RuleShape& rule);
/// Recognises G(src -> X^lag dst) and G(src -> X^lag !dst).
std::optional<RuleShape> match_rule(const Formula& f);

/// Human-readable rule listing: "## <activity> (N=<count>)" headers followed by one formula
/// per line. Lines starting with "# " are comments.
struct ListingSection {
    std::string activity;
    std::vector<Formula> rules;
};

std::vector<ListingSection> read_listing(std::istream& in, std::optional<Vocabulary> vocabulary = std::nullopt);
void write_listing(std::ostream& out, const std::vector<ListingSection>& sections, Style style = Style::unicode);

}  // namespace charl::ltl
