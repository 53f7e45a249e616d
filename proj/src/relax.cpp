#include "charl/relax.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace charl::relax {

std::vector<double> sample_relaxed(std::span<const double> logits, std::span<const double> noise,
                                   double temperature) {
    if (logits.empty() || logits.size() != noise.size())
        throw std::invalid_argument("sample_relaxed: logits and noise must be non-empty and equally sized");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw std::invalid_argument("sample_relaxed: temperature must be positive and finite");
    std::vector<double> z(logits.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (!std::isfinite(logits[k]) || !std::isfinite(noise[k]))
            throw std::invalid_argument("sample_relaxed: non-finite input");
        z[k] = (logits[k] + noise[k]) / temperature;
    }
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (auto& v : z) {
        v = std::exp(v - peak);
        total += v;
    }
    for (auto& v : z) v /= total;
    return z;
}

std::vector<double> harden(std::span<const double> relaxed) {
    std::vector<double> out(relaxed.size(), 0.0);
    if (relaxed.empty()) return out;
    std::size_t best = 0;
    for (std::size_t k = 1; k < relaxed.size(); ++k)
        if (relaxed[k] > relaxed[best]) best = k;
    out[best] = 1.0;
    return out;
}

double kl_to_uniform(std::span<const double> probs) {
    const double k = static_cast<double>(probs.size());
    double kl = 0.0;
    for (double p : probs) {
        if (p <= 0.0) continue;
        const double q = std::max(p, kProbFloor);
        kl += q * std::log(q * k);
    }
    return std::max(kl, 0.0);
}

double capacity_penalty(std::span<const double> per_sample_kl_totals, double capacity) {
    if (per_sample_kl_totals.empty()) throw std::invalid_argument("capacity_penalty: empty batch");
    double sum = 0.0;
    for (double total : per_sample_kl_totals) sum += std::max(0.0, total - capacity);
    return sum / static_cast<double>(per_sample_kl_totals.size());
}

ScheduleValue schedule_value(const CapacitySchedule& schedule, int epoch, int total_epochs) {
    if (total_epochs < 1 || epoch < 0 || epoch > total_epochs)
        throw std::invalid_argument("schedule_value: need 0 <= epoch <= total_epochs and total_epochs >= 1");
    if (!(schedule.temperature_start > 0.0 && schedule.temperature_end > 0.0 &&
          schedule.temperature_end <= schedule.temperature_start))
        throw std::invalid_argument("schedule_value: temperatures must be positive and non-increasing");
    const double progress = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return {schedule.temperature_start *
                std::pow(schedule.temperature_end / schedule.temperature_start, progress),
            schedule.kl_weight_max * progress, schedule.capacity_max * progress};
}

double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

nlohmann::json reference_fixtures() {
    using nlohmann::json;
    const std::vector<std::vector<double>> prob_cases = {
        {0.25, 0.25, 0.25, 0.25}, {1.0, 0.0, 0.0, 0.0}, {0.7, 0.1, 0.1, 0.1},
        {0.4, 0.3, 0.2, 0.1},     {0.5, 0.5},           {0.9, 0.05, 0.03, 0.02}};
    json kl = json::array();
    for (const auto& p : prob_cases) kl.push_back({{"probs", p}, {"kl", kl_to_uniform(p)}});

    const std::vector<std::pair<std::vector<double>, double>> batch_cases = {
        {{0.5}, 1.0}, {{3.0}, 1.0}, {{3.0, 1.0}, 1.0}, {{0.2, 2.5, 4.0, 1.1}, 1.5}};
    json cap = json::array();
    for (const auto& [totals, c] : batch_cases)
        cap.push_back({{"totals", totals}, {"capacity", c}, {"penalty", capacity_penalty(totals, c)}});

    const std::vector<double> logits = {std::log(4.0), 0.0, 0.0, 0.0};
    const std::vector<double> noise = {0.1, -0.3, 0.7, 0.0};
    json relaxed = json::array();
    for (double temperature : {1.0, 0.5, 2.0}) {
        relaxed.push_back({{"logits", logits},
                           {"noise", noise},
                           {"temperature", temperature},
                           {"relaxed", sample_relaxed(logits, noise, temperature)}});
    }
    return {{"kl_to_uniform", kl}, {"capacity_penalty", cap}, {"sample_relaxed", relaxed}};
}

}  // namespace charl::relax
