#include "charl/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <regex>
#include <stdexcept>

namespace charl::ltl {

struct Formula::Node {
    Op op;
    Proposition prop{};
    Formula lhs{nullptr};
    Formula rhs{nullptr};
    std::size_t depth = 0;
};

namespace {

bool is_binary(Op op) {
    return op == Op::conjunction || op == Op::disjunction || op == Op::implication || op == Op::until;
}

}  // namespace

Formula Formula::top() { return Formula(std::make_shared<const Node>(Node{Op::top})); }
Formula Formula::bottom() { return Formula(std::make_shared<const Node>(Node{Op::bottom})); }
Formula Formula::atom(Proposition p) { return Formula(std::make_shared<const Node>(Node{Op::atom, p})); }

Formula Formula::negation(Formula f) {
    const auto d = f.depth() + 1;
    return Formula(std::make_shared<const Node>(Node{Op::negation, {}, std::move(f), Formula(nullptr), d}));
}

Formula Formula::next(Formula f, int times) {
    if (times < 0) throw std::invalid_argument("next: negative repetition");
    for (int i = 0; i < times; ++i) {
        const auto d = f.depth() + 1;
        f = Formula(std::make_shared<const Node>(Node{Op::next, {}, std::move(f), Formula(nullptr), d}));
    }
    return f;
}

Formula Formula::eventually(Formula f) {
    const auto d = f.depth() + 1;
    return Formula(std::make_shared<const Node>(Node{Op::eventually, {}, std::move(f), Formula(nullptr), d}));
}

Formula Formula::globally(Formula f) {
    const auto d = f.depth() + 1;
    return Formula(std::make_shared<const Node>(Node{Op::globally, {}, std::move(f), Formula(nullptr), d}));
}

Formula Formula::conjunction(Formula a, Formula b) {
    const auto d = std::max(a.depth(), b.depth()) + 1;
    return Formula(std::make_shared<const Node>(Node{Op::conjunction, {}, std::move(a), std::move(b), d}));
}

Formula Formula::disjunction(Formula a, Formula b) {
    const auto d = std::max(a.depth(), b.depth()) + 1;
    return Formula(std::make_shared<const Node>(Node{Op::disjunction, {}, std::move(a), std::move(b), d}));
}

Formula Formula::implication(Formula a, Formula b) {
    const auto d = std::max(a.depth(), b.depth()) + 1;
    return Formula(std::make_shared<const Node>(Node{Op::implication, {}, std::move(a), std::move(b), d}));
}

Formula Formula::until(Formula a, Formula b) {
    const auto d = std::max(a.depth(), b.depth()) + 1;
    return Formula(std::make_shared<const Node>(Node{Op::until, {}, std::move(a), std::move(b), d}));
}

Op Formula::op() const { return node_->op; }
Proposition Formula::proposition() const { return node_->prop; }
const Formula& Formula::left() const { return node_->lhs; }
const Formula& Formula::right() const { return node_->rhs; }
std::size_t Formula::depth() const { return node_ ? node_->depth : 0; }

bool Formula::operator==(const Formula& other) const {
    if (node_ == other.node_) return true;
    if (!node_ || !other.node_) return false;
    if (node_->op != other.node_->op) return false;
    if (node_->op == Op::atom) return node_->prop == other.node_->prop;
    return node_->lhs == other.node_->lhs && node_->rhs == other.node_->rhs;
}

ParseError::ParseError(const std::string& message, std::size_t position)
    : DataError("at offset " + std::to_string(position) + ": " + message), position_(position) {}

// ---------------------------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { lparen, rparen, negation, conjunction, disjunction, implication, next, eventually, globally,
                 until, top, bottom, atom, end };

struct Token {
    Tok kind;
    std::size_t pos;
    int power = 1;
    Proposition prop{};
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            const std::size_t start = pos_;
            if (pos_ >= text_.size()) {
                out.push_back({Tok::end, start});
                return out;
            }
            out.push_back(lex_one(start));
        }
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool take(std::string_view s) {
        if (text_.substr(pos_, s.size()) == s) {
            pos_ += s.size();
            return true;
        }
        return false;
    }

    int lex_power() {
        if (!take("^")) return 1;
        const bool braced = take("{");
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) throw ParseError("expected repetition count after '^'", start);
        const int n = std::stoi(std::string(text_.substr(start, pos_ - start)));
        if (braced && !take("}")) throw ParseError("expected '}'", pos_);
        if (n < 1) throw ParseError("repetition count must be >= 1", start);
        return n;
    }

    Token lex_one(std::size_t start) {
        if (take("(")) return {Tok::lparen, start};
        if (take(")")) return {Tok::rparen, start};
        if (take("->") || take("=>") || take("→")) return {Tok::implication, start};
        if (take("&&") || take("&") || take("/\\") || take("∧")) return {Tok::conjunction, start};
        if (take("||") || take("|") || take("\\/") || take("∨")) return {Tok::disjunction, start};
        if (take("!") || take("~") || take("¬")) return {Tok::negation, start};
        if (take("[]") || take("□") || take("◻")) return {Tok::globally, start};
        if (take("<>") || take("◇") || take("◊")) return {Tok::eventually, start};
        if (take("○") || take("◯")) return {Tok::next, start, lex_power()};
        if (take("⊤")) return {Tok::top, start};
        if (take("⊥")) return {Tok::bottom, start};
        if (text_.substr(pos_, 2) == "z_") return lex_atom(start);
        if (std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
            std::size_t end = pos_;
            while (end < text_.size() && std::isalnum(static_cast<unsigned char>(text_[end]))) ++end;
            const std::string_view word = text_.substr(pos_, end - pos_);
            pos_ = end;
            if (word == "X") return {Tok::next, start, lex_power()};
            if (word == "F") return {Tok::eventually, start};
            if (word == "G") return {Tok::globally, start};
            if (word == "U") return {Tok::until, start};
            if (word == "true") return {Tok::top, start};
            if (word == "false") return {Tok::bottom, start};
            throw ParseError("unknown word '" + std::string(word) + "'", start);
        }
        throw ParseError("unexpected character", start);
    }

    Token lex_atom(std::size_t start) {
        std::size_t end = pos_ + 2;
        if (end < text_.size() && text_[end] == '{') {
            const auto close = text_.find('}', end);
            if (close == std::string_view::npos) throw ParseError("unterminated atom", start);
            end = close + 1;
        } else {
            while (end < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
                ++end;
        }
        const auto name = text_.substr(pos_, end - pos_);
        pos_ = end;
        try {
            return {Tok::atom, start, 1, parse_proposition(name)};
        } catch (const DataError&) {
            throw ParseError("malformed atom '" + std::string(name) + "'", start);
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, std::optional<Vocabulary> vocab)
        : tokens_(std::move(tokens)), vocab_(vocab) {}

    Formula run() {
        Formula f = parse_until();
        if (peek().kind != Tok::end) throw ParseError("unexpected token after formula", peek().pos);
        return f;
    }

private:
    const Token& peek() const { return tokens_[i_]; }
    const Token& advance() { return tokens_[i_++]; }

    Formula parse_until() {
        Formula lhs = parse_implication();
        if (peek().kind == Tok::until) {
            advance();
            return Formula::until(std::move(lhs), parse_until());
        }
        return lhs;
    }

    Formula parse_implication() {
        Formula lhs = parse_disjunction();
        if (peek().kind == Tok::implication) {
            advance();
            return Formula::implication(std::move(lhs), parse_implication());
        }
        return lhs;
    }

    Formula parse_disjunction() {
        Formula lhs = parse_conjunction();
        while (peek().kind == Tok::disjunction) {
            advance();
            lhs = Formula::disjunction(std::move(lhs), parse_conjunction());
        }
        return lhs;
    }

    Formula parse_conjunction() {
        Formula lhs = parse_prefix();
        while (peek().kind == Tok::conjunction) {
            advance();
            lhs = Formula::conjunction(std::move(lhs), parse_prefix());
        }
        return lhs;
    }

    Formula parse_prefix() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::negation: advance(); return Formula::negation(parse_prefix());
            case Tok::next: {
                const int power = advance().power;
                return Formula::next(parse_prefix(), power);
            }
            case Tok::eventually: advance(); return Formula::eventually(parse_prefix());
            case Tok::globally: advance(); return Formula::globally(parse_prefix());
            default: return parse_primary();
        }
    }

    Formula parse_primary() {
        const Token t = advance();
        switch (t.kind) {
            case Tok::top: return Formula::top();
            case Tok::bottom: return Formula::bottom();
            case Tok::atom:
                if (vocab_ && (t.prop.variable >= vocab_->num_variables || t.prop.category >= vocab_->num_categories))
                    throw ParseError("unknown atom " + t.prop.name(), t.pos);
                return Formula::atom(t.prop);
            case Tok::lparen: {
                Formula inner = parse_until();
                if (peek().kind != Tok::rparen) throw ParseError("expected ')'", peek().pos);
                advance();
                return inner;
            }
            case Tok::end: throw ParseError("unexpected end of formula", t.pos);
            default: throw ParseError("expected an atom, constant or '('", t.pos);
        }
    }

    std::vector<Token> tokens_;
    std::size_t i_ = 0;
    std::optional<Vocabulary> vocab_;
};

// ---------------------------------------------------------------------------------------------
// Printing

struct Glyphs {
    const char* top;
    const char* bottom;
    const char* negation;
    const char* next;
    const char* eventually;
    const char* globally;
    const char* conjunction;
    const char* disjunction;
    const char* implication;
    bool letter_prefixes;  // prefix operators are words and need a separating space
};

constexpr Glyphs kAscii{"true", "false", "!", "X", "F", "G", " & ", " | ", " -> ", true};
constexpr Glyphs kUnicode{"⊤", "⊥", "¬", "○", "◇", "□", " ∧ ", " ∨ ", " → ", false};

void print_to(std::string& out, const Formula& f, const Glyphs& g, bool top_level) {
    const auto prefix = [&](const char* glyph, const Formula& operand, bool spaced) {
        out += glyph;
        if (spaced && !is_binary(operand.op())) out += ' ';
        print_to(out, operand, g, false);
    };
    switch (f.op()) {
        case Op::top: out += g.top; return;
        case Op::bottom: out += g.bottom; return;
        case Op::atom: out += f.proposition().name(); return;
        case Op::negation: prefix(g.negation, f.left(), false); return;
        case Op::eventually: prefix(g.eventually, f.left(), g.letter_prefixes); return;
        case Op::globally: prefix(g.globally, f.left(), g.letter_prefixes); return;
        case Op::next: {
            int power = 0;
            const Formula* inner = &f;
            while (inner->op() == Op::next) {
                ++power;
                inner = &inner->left();
            }
            out += g.next;
            if (power > 1) {
                out += '^';
                out += std::to_string(power);
            }
            if ((g.letter_prefixes || power > 1) && !is_binary(inner->op())) out += ' ';
            print_to(out, *inner, g, false);
            return;
        }
        default: break;
    }
    const char* glyph = f.op() == Op::conjunction   ? g.conjunction
                        : f.op() == Op::disjunction ? g.disjunction
                        : f.op() == Op::implication ? g.implication
                                                    : " U ";
    if (!top_level) out += '(';
    print_to(out, f.left(), g, false);
    out += glyph;
    print_to(out, f.right(), g, false);
    if (!top_level) out += ')';
}

}  // namespace

Formula parse(std::string_view text, std::optional<Vocabulary> vocabulary) {
    return Parser(Lexer(text).run(), vocabulary).run();
}

std::string print(const Formula& f, Style style) {
    std::string out;
    print_to(out, f, style == Style::ascii ? kAscii : kUnicode, true);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Evaluation

bool TraceModel::holds(Proposition p, std::size_t t) const {
    const auto column = p.column(view_.num_categories);
    if (p.category >= view_.num_categories || column >= view_.width)
        throw std::out_of_range("atom " + p.name() + " is outside the trace's propositions");
    return view_.at(t, column);
}

std::vector<char> satisfaction(const Formula& f, const TraceModel& trace) {
    const std::size_t n = trace.length();
    std::vector<char> s(n, 0);
    switch (f.op()) {
        case Op::top: std::fill(s.begin(), s.end(), 1); break;
        case Op::bottom: break;
        case Op::atom:
            for (std::size_t t = 0; t < n; ++t) s[t] = trace.holds(f.proposition(), t);
            break;
        case Op::negation: {
            const auto a = satisfaction(f.left(), trace);
            for (std::size_t t = 0; t < n; ++t) s[t] = !a[t];
            break;
        }
        case Op::conjunction:
        case Op::disjunction:
        case Op::implication: {
            const auto a = satisfaction(f.left(), trace);
            const auto b = satisfaction(f.right(), trace);
            for (std::size_t t = 0; t < n; ++t) {
                s[t] = f.op() == Op::conjunction   ? (a[t] && b[t])
                       : f.op() == Op::disjunction ? (a[t] || b[t])
                                                   : (!a[t] || b[t]);
            }
            break;
        }
        case Op::next: {
            const auto a = satisfaction(f.left(), trace);
            for (std::size_t t = 0; t + 1 < n; ++t) s[t] = a[t + 1];
            break;
        }
        case Op::globally:
        case Op::eventually: {
            const auto a = satisfaction(f.left(), trace);
            const bool all = f.op() == Op::globally;
            for (std::size_t t = n; t-- > 0;) {
                const bool rest = t + 1 < n ? s[t + 1] != 0 : all;
                s[t] = all ? (a[t] && rest) : (a[t] || rest);
            }
            break;
        }
        case Op::until: {
            const auto a = satisfaction(f.left(), trace);
            const auto b = satisfaction(f.right(), trace);
            for (std::size_t t = n; t-- > 0;) {
                const bool rest = t + 1 < n && s[t + 1];
                s[t] = b[t] || (a[t] && rest);
            }
            break;
        }
    }
    return s;
}

bool evaluate(const Formula& f, const TraceModel& trace, std::size_t t) {
    if (t >= trace.length()) throw std::out_of_range("evaluate: position outside trace");
    return satisfaction(f, trace)[t] != 0;
}

RuleCounts count_rule(const SegmentView& trace, Proposition src, Proposition dst, int lag, Polarity polarity) {
    if (lag < 1) throw std::invalid_argument("count_rule: lag must be >= 1");
    const auto l = static_cast<std::size_t>(lag);
    if (l >= trace.length) throw std::invalid_argument("count_rule: lag must be shorter than the segment");
    const auto sc = src.column(trace.num_categories);
    const auto dc = dst.column(trace.num_categories);
    const bool negative = polarity == Polarity::negative;
    RuleCounts c;
    for (std::size_t t = 0; t + l < trace.length; ++t) {
        if (!trace.at(t, sc)) continue;
        ++c.n;
        if (trace.at(t + l, dc) != negative) ++c.h;
    }
    return c;
}

Formula rule_formula(const RuleShape& rule) {
    Formula consequent = Formula::atom(rule.dst);
    if (rule.polarity == Polarity::negative) consequent = Formula::negation(std::move(consequent));
    return Formula::globally(
        Formula::implication(Formula::atom(rule.src), Formula::next(std::move(consequent), rule.lag)));
}

std::optional<RuleShape> match_rule(const Formula& f) {
    if (f.op() != Op::globally || f.left().op() != Op::implication) return std::nullopt;
    const Formula& imp = f.left();
    if (imp.left().op() != Op::atom) return std::nullopt;
    RuleShape shape;
    shape.src = imp.left().proposition();
    const Formula* c = &imp.right();
    shape.lag = 0;
    while (c->op() == Op::next) {
        ++shape.lag;
        c = &c->left();
    }
    if (shape.lag < 1) return std::nullopt;
    if (c->op() == Op::negation) {
        shape.polarity = Polarity::negative;
        c = &c->left();
    }
    if (c->op() != Op::atom) return std::nullopt;
    shape.dst = c->proposition();
    return shape;
}

std::vector<ListingSection> read_listing(std::istream& in, std::optional<Vocabulary> vocabulary) {
    static const std::regex header(R"(^##\s+(.+?)\s+\(N=(\d+)\)\s*$)");
    std::vector<ListingSection> sections;
    std::vector<std::size_t> declared;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        std::smatch m;
        if (std::regex_match(line, m, header)) {
            sections.push_back({m[1].str(), {}});
            declared.push_back(std::stoul(m[2].str()));
            continue;
        }
        if (line.compare(first, 2, "# ") == 0 || line.substr(first) == "#") continue;
        if (sections.empty()) throw DataError("listing line " + std::to_string(line_no) + ": rule before any header");
        try {
            sections.back().rules.push_back(parse(std::string_view(line).substr(first), vocabulary));
        } catch (const ParseError& e) {
            throw DataError("listing line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (sections[i].rules.size() != declared[i]) {
            throw DataError("listing section '" + sections[i].activity + "' declares N=" +
                            std::to_string(declared[i]) + " but lists " + std::to_string(sections[i].rules.size()));
        }
    }
    return sections;
}

void write_listing(std::ostream& out, const std::vector<ListingSection>& sections, Style style) {
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i > 0) out << "\n";
        out << "## " << sections[i].activity << " (N=" << sections[i].rules.size() << ")\n";
        for (const auto& f : sections[i].rules) out << print(f, style) << "\n";
    }
}

}  // namespace charl::ltl
