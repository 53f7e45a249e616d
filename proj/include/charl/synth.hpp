#pragma once

#include "charl/proposition.hpp"
#include "charl/trace.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace charl {

/// A dependency planted into synthetic data: when `src` holds at t, `dst` holds at t + lag
/// with probability `compliance` (positive) or fails to hold with that probability (negative).
struct PlantedRule {
    Proposition src;
    Proposition dst;
    int lag = 1;
    Polarity polarity = Polarity::positive;
    double compliance = 1.0;
};

struct PlantedActivity {
    std::string name;
    /// Declaration order is priority order when two rules target the same variable and step.
    std::vector<PlantedRule> rules;
};

struct PlantedModel {
    int num_variables = 6;
    int num_categories = 4;
    /// Per-variable category distribution; empty means uniform for every variable.
    std::vector<std::vector<double>> base;
    std::vector<PlantedActivity> activities;

    /// Throws ConfigError on out-of-range propositions, lags, compliances, or on two rules of
    /// one activity sharing source, lag and destination variable.
    void validate() const;
    int max_lag() const;
};

/// One trace per activity, each of length T. Deterministic given `seed`.
std::vector<CategoricalTrace> synthesize(const PlantedModel& model, std::size_t length, std::uint64_t seed);

/// Four activities, two planted rules each, d=6, K=4, compliance 0.95.
PlantedModel default_planted_model();

nlohmann::json to_json(const PlantedModel& model);
PlantedModel planted_model_from_json(const nlohmann::json& j);

/// Portable draws on top of std::mt19937_64 (the engine is fully specified; the standard
/// distributions are not, so uniform and categorical sampling are done here).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Index drawn from unnormalised non-negative weights.
    std::size_t categorical(const std::vector<double>& weights);

private:
    std::mt19937_64 engine_;
};

}  // namespace charl
