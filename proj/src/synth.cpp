#include "charl/synth.hpp"

#include <algorithm>
#include <numeric>

namespace charl {

std::size_t Rng::categorical(const std::vector<double>& weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    // Rounding can leave u marginally above the last bucket.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return 0;
}

void PlantedModel::validate() const {
    if (num_variables < 1 || num_categories < 2) throw ConfigError("planted model: need d >= 1 and K >= 2");
    if (!base.empty()) {
        if (base.size() != static_cast<std::size_t>(num_variables))
            throw ConfigError("planted model: base needs one distribution per variable");
        for (const auto& dist : base) {
            if (dist.size() != static_cast<std::size_t>(num_categories) ||
                std::any_of(dist.begin(), dist.end(), [](double w) { return !(w >= 0.0); }) ||
                std::accumulate(dist.begin(), dist.end(), 0.0) <= 0.0)
                throw ConfigError("planted model: invalid base distribution");
        }
    }
    const auto in_range = [&](Proposition p) {
        return p.variable >= 0 && p.variable < num_variables && p.category >= 0 && p.category < num_categories;
    };
    for (const auto& activity : activities) {
        const std::string where = "planted model, activity '" + activity.name + "': ";
        for (std::size_t i = 0; i < activity.rules.size(); ++i) {
            const auto& r = activity.rules[i];
            if (!in_range(r.src) || !in_range(r.dst)) throw ConfigError(where + "proposition out of range");
            if (r.src == r.dst) throw ConfigError(where + "source equals destination");
            if (r.lag < 1) throw ConfigError(where + "lag must be >= 1");
            if (!(r.compliance > 0.5 && r.compliance <= 1.0))
                throw ConfigError(where + "compliance must lie in (0.5, 1]");
            for (std::size_t j = 0; j < i; ++j) {
                const auto& o = activity.rules[j];
                if (o.src == r.src && o.lag == r.lag && o.dst.variable == r.dst.variable) {
                    throw ConfigError(where + "rules " + std::to_string(j) + " and " + std::to_string(i) +
                                      " fire together on the same destination variable");
                }
            }
        }
    }
}

int PlantedModel::max_lag() const {
    int m = 0;
    for (const auto& a : activities)
        for (const auto& r : a.rules) m = std::max(m, r.lag);
    return m;
}

namespace {

std::vector<double> without(std::vector<double> weights, int category) {
    weights[static_cast<std::size_t>(category)] = 0.0;
    if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0) {
        std::fill(weights.begin(), weights.end(), 1.0);
        weights[static_cast<std::size_t>(category)] = 0.0;
    }
    return weights;
}

}  // namespace

std::vector<CategoricalTrace> synthesize(const PlantedModel& model, std::size_t length, std::uint64_t seed) {
    model.validate();
    if (length < 10 * static_cast<std::size_t>(std::max(model.max_lag(), 1)))
        throw ConfigError("synthesize: length must be at least 10 x the largest planted lag");

    const auto d = static_cast<std::size_t>(model.num_variables);
    std::vector<std::vector<double>> base = model.base;
    if (base.empty()) base.assign(d, std::vector<double>(static_cast<std::size_t>(model.num_categories), 1.0));

    std::vector<CategoricalTrace> out;
    for (std::size_t a = 0; a < model.activities.size(); ++a) {
        const auto& activity = model.activities[a];
        Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (a + 1)));

        std::vector<int> values(length * d);
        std::vector<char> forced(d);
        for (std::size_t t = 0; t < length; ++t) {
            int* row = values.data() + t * d;
            for (std::size_t v = 0; v < d; ++v) row[v] = static_cast<int>(rng.categorical(base[v]));
            std::fill(forced.begin(), forced.end(), 0);
            for (const auto& rule : activity.rules) {
                const auto lag = static_cast<std::size_t>(rule.lag);
                if (t < lag) continue;
                const auto dv = static_cast<std::size_t>(rule.dst.variable);
                if (forced[dv]) continue;
                if (values[(t - lag) * d + static_cast<std::size_t>(rule.src.variable)] != rule.src.category)
                    continue;
                forced[dv] = 1;
                const bool comply = rng.uniform() < rule.compliance;
                const bool take = (rule.polarity == Polarity::positive) == comply;
                row[dv] = take ? rule.dst.category
                               : static_cast<int>(rng.categorical(without(base[dv], rule.dst.category)));
            }
        }
        out.emplace_back(std::move(values), model.num_variables, model.num_categories, activity.name,
                         activity.name);
    }
    return out;
}

PlantedModel default_planted_model() {
    using P = Polarity;
    PlantedModel m;
    m.num_variables = 6;
    m.num_categories = 4;
    m.activities = {
        {"alpha", {{{0, 1}, {1, 2}, 2, P::positive, 0.95}, {{2, 3}, {3, 0}, 1, P::negative, 0.95}}},
        {"beta", {{{4, 0}, {5, 1}, 3, P::positive, 0.95}, {{1, 3}, {0, 2}, 2, P::negative, 0.95}}},
        {"gamma", {{{3, 2}, {2, 0}, 1, P::positive, 0.95}, {{5, 2}, {4, 3}, 4, P::positive, 0.95}}},
        {"delta", {{{2, 1}, {1, 1}, 5, P::negative, 0.95}, {{0, 0}, {3, 3}, 2, P::positive, 0.95}}},
    };
    return m;
}

nlohmann::json to_json(const PlantedModel& model) {
    nlohmann::json j;
    j["num_variables"] = model.num_variables;
    j["num_categories"] = model.num_categories;
    j["base"] = model.base;
    j["activities"] = nlohmann::json::array();
    for (const auto& a : model.activities) {
        nlohmann::json rules = nlohmann::json::array();
        for (const auto& r : a.rules) {
            rules.push_back({{"src", r.src.name()},
                             {"dst", r.dst.name()},
                             {"lag", r.lag},
                             {"polarity", to_string(r.polarity)},
                             {"compliance", r.compliance}});
        }
        j["activities"].push_back({{"name", a.name}, {"rules", rules}});
    }
    return j;
}

PlantedModel planted_model_from_json(const nlohmann::json& j) {
    try {
        PlantedModel m;
        m.num_variables = j.at("num_variables").get<int>();
        m.num_categories = j.at("num_categories").get<int>();
        if (j.contains("base")) m.base = j.at("base").get<std::vector<std::vector<double>>>();
        for (const auto& a : j.at("activities")) {
            PlantedActivity act;
            act.name = a.at("name").get<std::string>();
            for (const auto& r : a.at("rules")) {
                act.rules.push_back({parse_proposition(r.at("src").get<std::string>()),
                                     parse_proposition(r.at("dst").get<std::string>()), r.at("lag").get<int>(),
                                     parse_polarity(r.at("polarity").get<std::string>()),
                                     r.at("compliance").get<double>()});
            }
            m.activities.push_back(std::move(act));
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("planted model: ") + e.what());
    }
}

}  // namespace charl
