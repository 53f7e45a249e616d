#pragma once

#include "charl/discovery.hpp"
#include "charl/ltl.hpp"
#include "charl/trace.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace charl {

/// G(src -> X^lag [!]dst) with its reliability estimates and ranking weight.
struct TemporalRule {
    std::string activity;
    Proposition src;
    Proposition dst;
    int lag = 1;
    Polarity polarity = Polarity::positive;
    /// |MCI statistic| of the link the rule came from.
    double omega = 0.0;
    long n = 0;  ///< antecedent occurrences in the rule's own activity
    long h = 0;  ///< of those, satisfied consequents
    double p_in = 0.5;
    double p_out = 0.5;
    double margin = 0.0;
    double weight = 0.0;

    ltl::RuleShape shape() const { return {src, dst, lag, polarity}; }
    ltl::Formula formula() const { return ltl::rule_formula(shape()); }
};

/// Laplace-smoothed satisfaction rate (h + 1) / (n + 2).
double laplace_rate(long h, long n);

/// omega * max(0, margin) * ln(1 + n).
double rule_weight(double omega, double margin, long n);

/// Positive strength gives an activation rule, negative an exclusion rule. Throws
/// std::invalid_argument for strength 0 or lag < 1.
TemporalRule translate(const LaggedLink& link, const std::string& activity);

/// Reference estimator: sums count_rule over every training segment, in-class and out-of-class.
TemporalRule estimate(const TemporalRule& rule, const LabeledDataset& train);

/// Per-activity antecedent/consequent tallies for every (src, dst, lag) up to `max_lag`, so
/// that estimating many candidate rules does not rescan the segments.
class CountTable {
public:
    CountTable(const LabeledDataset& train, int max_lag);

    ltl::RuleCounts in_class(std::size_t activity, const ltl::RuleShape& rule) const;
    ltl::RuleCounts out_of_class(std::size_t activity, const ltl::RuleShape& rule) const;
    const std::vector<std::string>& activities() const { return activities_; }
    int max_lag() const { return max_lag_; }

private:
    ltl::RuleCounts lookup(std::size_t activity, const ltl::RuleShape& rule) const;
    std::size_t base(std::size_t activity, int lag) const;

    std::vector<std::string> activities_;
    int max_lag_ = 0;
    std::size_t width_ = 0;
    int num_categories_ = 0;
    std::vector<long> antecedents_;  // [activity][lag-1][src]
    std::vector<long> joint_;        // [activity][lag-1][src][dst]
};

TemporalRule estimate(const TemporalRule& rule, const CountTable& table);

/// Drops rules with margin <= 0, collapses duplicates (same src, dst, lag, polarity) keeping the
/// highest weight, sorts by weight with ties broken on (|margin|, omega, src, dst, lag) and
/// truncates to `budget`. Independent of input order.
std::vector<TemporalRule> select(std::vector<TemporalRule> candidates, std::size_t budget);

/// The serialised classifier: per-activity rule sets and prototypes for rule-less activities.
struct RuleBase {
    int num_variables = 0;
    int num_categories = 0;
    std::vector<std::string> activities;
    std::vector<std::vector<TemporalRule>> rules;
    std::vector<std::optional<std::vector<double>>> prototypes;
    std::string fingerprint;

    std::size_t total_rules() const;
    std::size_t activity_index(const std::string& activity) const;
    /// Throws DataError when sizes disagree, a rule set is not sorted by weight, or a
    /// rule-less activity has no prototype.
    void validate() const;
};

nlohmann::json to_json(const RuleBase& rb);
RuleBase rulebase_from_json(const nlohmann::json& j);

/// Rule listing in the LTL grammar, one section per activity.
void write_rule_listing(std::ostream& out, const RuleBase& rb);

/// Short stable hex digest used for fingerprints.
std::string digest(const std::string& text);

}  // namespace charl
