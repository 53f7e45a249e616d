#include "charl/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace charl {

double laplace_rate(long h, long n) { return (static_cast<double>(h) + 1.0) / (static_cast<double>(n) + 2.0); }

double rule_weight(double omega, double margin, long n) {
    return omega * std::max(0.0, margin) * std::log1p(static_cast<double>(n));
}

TemporalRule translate(const LaggedLink& link, const std::string& activity) {
    if (link.lag < 1) throw std::invalid_argument("translate: lag must be >= 1");
    if (link.strength == 0.0 || !std::isfinite(link.strength))
        throw std::invalid_argument("translate: link " + link.src.name() + " -> " + link.dst.name() +
                                    " has no usable sign");
    TemporalRule r;
    r.activity = activity;
    r.src = link.src;
    r.dst = link.dst;
    r.lag = link.lag;
    r.polarity = link.strength > 0.0 ? Polarity::positive : Polarity::negative;
    r.omega = std::abs(link.strength);
    return r;
}

namespace {

TemporalRule finish(TemporalRule rule, ltl::RuleCounts in, ltl::RuleCounts out) {
    rule.n = in.n;
    rule.h = in.h;
    rule.p_in = laplace_rate(in.h, in.n);
    rule.p_out = laplace_rate(out.h, out.n);
    rule.margin = rule.p_in - rule.p_out;
    rule.weight = rule_weight(rule.omega, rule.margin, rule.n);
    return rule;
}

}  // namespace

TemporalRule estimate(const TemporalRule& rule, const LabeledDataset& train) {
    if (train.segments.empty()) throw DataError("estimate: empty training set");
    ltl::RuleCounts in, out;
    for (const auto& seg : train.segments) {
        const auto c = ltl::count_rule(seg.view(), rule.src, rule.dst, rule.lag, rule.polarity);
        auto& target = seg.label() == rule.activity ? in : out;
        target.n += c.n;
        target.h += c.h;
    }
    return finish(rule, in, out);
}

CountTable::CountTable(const LabeledDataset& train, int max_lag) : activities_(train.activities), max_lag_(max_lag) {
    if (train.segments.empty()) throw DataError("count table: empty training set");
    if (max_lag < 1) throw std::invalid_argument("count table: max_lag must be >= 1");
    width_ = train.segments.front().width();
    num_categories_ = train.segments.front().num_categories();
    const std::size_t lags = static_cast<std::size_t>(max_lag);
    antecedents_.assign(activities_.size() * lags * width_, 0);
    joint_.assign(activities_.size() * lags * width_ * width_, 0);

    std::vector<std::vector<std::size_t>> active;
    for (const auto& seg : train.segments) {
        const std::size_t a = train.activity_index(seg.label());
        const SegmentView view = seg.view();
        active.assign(view.length, {});
        for (std::size_t t = 0; t < view.length; ++t)
            for (std::size_t m = 0; m < width_; ++m)
                if (view.at(t, m)) active[t].push_back(m);
        for (std::size_t lag = 1; lag <= lags && lag < view.length; ++lag) {
            const std::size_t b = base(a, static_cast<int>(lag));
            for (std::size_t t = 0; t + lag < view.length; ++t) {
                for (std::size_t src : active[t]) {
                    ++antecedents_[b + src];
                    long* row = &joint_[(b + src) * width_];
                    for (std::size_t dst : active[t + lag]) ++row[dst];
                }
            }
        }
    }
}

std::size_t CountTable::base(std::size_t activity, int lag) const {
    return (activity * static_cast<std::size_t>(max_lag_) + static_cast<std::size_t>(lag - 1)) * width_;
}

ltl::RuleCounts CountTable::lookup(std::size_t activity, const ltl::RuleShape& rule) const {
    if (rule.lag < 1 || rule.lag > max_lag_) throw std::invalid_argument("count table: lag outside the table");
    const std::size_t b = base(activity, rule.lag);
    const std::size_t s = rule.src.column(num_categories_);
    const std::size_t d = rule.dst.column(num_categories_);
    if (s >= width_ || d >= width_) throw std::out_of_range("count table: proposition outside the table");
    const long n = antecedents_[b + s];
    const long joint = joint_[(b + s) * width_ + d];
    return {n, rule.polarity == Polarity::positive ? joint : n - joint};
}

ltl::RuleCounts CountTable::in_class(std::size_t activity, const ltl::RuleShape& rule) const {
    return lookup(activity, rule);
}

ltl::RuleCounts CountTable::out_of_class(std::size_t activity, const ltl::RuleShape& rule) const {
    ltl::RuleCounts total;
    for (std::size_t a = 0; a < activities_.size(); ++a) {
        if (a == activity) continue;
        const auto c = lookup(a, rule);
        total.n += c.n;
        total.h += c.h;
    }
    return total;
}

TemporalRule estimate(const TemporalRule& rule, const CountTable& table) {
    const auto it = std::find(table.activities().begin(), table.activities().end(), rule.activity);
    if (it == table.activities().end()) throw DataError("estimate: unknown activity '" + rule.activity + "'");
    const auto a = static_cast<std::size_t>(it - table.activities().begin());
    return finish(rule, table.in_class(a, rule.shape()), table.out_of_class(a, rule.shape()));
}

namespace {

// Strict weak order: best rule first.
bool ranks_before(const TemporalRule& a, const TemporalRule& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (std::abs(a.margin) != std::abs(b.margin)) return std::abs(a.margin) > std::abs(b.margin);
    if (a.omega != b.omega) return a.omega > b.omega;
    return std::tie(a.src, a.dst, a.lag, a.polarity) < std::tie(b.src, b.dst, b.lag, b.polarity);
}

}  // namespace

std::vector<TemporalRule> select(std::vector<TemporalRule> candidates, std::size_t budget) {
    std::erase_if(candidates, [](const TemporalRule& r) { return !(r.margin > 0.0); });
    std::sort(candidates.begin(), candidates.end(), ranks_before);
    std::vector<TemporalRule> out;
    for (auto& r : candidates) {
        if (out.size() >= budget) break;
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const TemporalRule& o) {
            return o.shape() == r.shape();
        });
        if (!duplicate) out.push_back(std::move(r));
    }
    return out;
}

std::size_t RuleBase::total_rules() const {
    std::size_t n = 0;
    for (const auto& r : rules) n += r.size();
    return n;
}

std::size_t RuleBase::activity_index(const std::string& activity) const {
    const auto it = std::find(activities.begin(), activities.end(), activity);
    if (it == activities.end()) throw DataError("rule base: unknown activity '" + activity + "'");
    return static_cast<std::size_t>(it - activities.begin());
}

void RuleBase::validate() const {
    if (rules.size() != activities.size() || prototypes.size() != activities.size())
        throw DataError("rule base: per-activity tables disagree in size");
    const auto width = static_cast<std::size_t>(num_variables) * static_cast<std::size_t>(num_categories);
    for (std::size_t a = 0; a < activities.size(); ++a) {
        for (std::size_t i = 1; i < rules[a].size(); ++i)
            if (rules[a][i].weight > rules[a][i - 1].weight)
                throw DataError("rule base: rules of '" + activities[a] + "' are not sorted by weight");
        for (const auto& r : rules[a]) {
            if (r.src.variable >= num_variables || r.dst.variable >= num_variables ||
                r.src.category >= num_categories || r.dst.category >= num_categories)
                throw DataError("rule base: rule of '" + activities[a] + "' names an unknown proposition");
        }
        if (rules[a].empty() && !prototypes[a])
            throw DataError("rule base: activity '" + activities[a] + "' has neither rules nor a prototype");
        if (prototypes[a] && prototypes[a]->size() != width)
            throw DataError("rule base: prototype of '" + activities[a] + "' has the wrong length");
    }
}

nlohmann::json to_json(const RuleBase& rb) {
    nlohmann::json acts = nlohmann::json::array();
    for (std::size_t a = 0; a < rb.activities.size(); ++a) {
        nlohmann::json rules = nlohmann::json::array();
        for (const auto& r : rb.rules[a]) {
            rules.push_back({{"src", r.src.name()},
                             {"dst", r.dst.name()},
                             {"lag", r.lag},
                             {"polarity", to_string(r.polarity)},
                             {"omega", r.omega},
                             {"n", r.n},
                             {"h", r.h},
                             {"p_in", r.p_in},
                             {"p_out", r.p_out},
                             {"margin", r.margin},
                             {"weight", r.weight}});
        }
        acts.push_back({{"name", rb.activities[a]},
                        {"rules", rules},
                        {"prototype", rb.prototypes[a] ? nlohmann::json(*rb.prototypes[a]) : nlohmann::json()}});
    }
    return {{"num_variables", rb.num_variables},
            {"num_categories", rb.num_categories},
            {"fingerprint", rb.fingerprint},
            {"activities", acts}};
}

RuleBase rulebase_from_json(const nlohmann::json& j) {
    try {
        RuleBase rb;
        rb.num_variables = j.at("num_variables").get<int>();
        rb.num_categories = j.at("num_categories").get<int>();
        rb.fingerprint = j.value("fingerprint", std::string{});
        for (const auto& a : j.at("activities")) {
            const auto name = a.at("name").get<std::string>();
            rb.activities.push_back(name);
            std::vector<TemporalRule> rules;
            for (const auto& r : a.at("rules")) {
                TemporalRule t;
                t.activity = name;
                t.src = parse_proposition(r.at("src").get<std::string>());
                t.dst = parse_proposition(r.at("dst").get<std::string>());
                t.lag = r.at("lag").get<int>();
                t.polarity = parse_polarity(r.at("polarity").get<std::string>());
                t.omega = r.at("omega").get<double>();
                t.n = r.at("n").get<long>();
                t.h = r.at("h").get<long>();
                t.p_in = r.at("p_in").get<double>();
                t.p_out = r.at("p_out").get<double>();
                t.margin = r.at("margin").get<double>();
                t.weight = r.at("weight").get<double>();
                rules.push_back(t);
            }
            rb.rules.push_back(std::move(rules));
            const auto& proto = a.at("prototype");
            rb.prototypes.push_back(proto.is_null() ? std::nullopt
                                                    : std::optional(proto.get<std::vector<double>>()));
        }
        rb.validate();
        return rb;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("rule base: ") + e.what());
    }
}

void write_rule_listing(std::ostream& out, const RuleBase& rb) {
    std::vector<ltl::ListingSection> sections;
    for (std::size_t a = 0; a < rb.activities.size(); ++a) {
        ltl::ListingSection s{rb.activities[a], {}};
        for (const auto& r : rb.rules[a]) s.rules.push_back(r.formula());
        sections.push_back(std::move(s));
    }
    ltl::write_listing(out, sections, ltl::Style::unicode);
}

std::string digest(const std::string& text) {
    // 64-bit FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace charl
