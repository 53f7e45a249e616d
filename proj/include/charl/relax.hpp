#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace charl::relax {

/// Floor applied to probabilities before taking logs.
inline constexpr double kProbFloor = 1e-12;

struct RelaxationParams {
    double temperature = 1.0;
    int num_categories = 4;
};

/// Training schedules for the categorical encoder. Temperature decays exponentially from
/// `temperature_start` to `temperature_end`; the KL weight and the capacity ramp linearly from 0.
struct CapacitySchedule {
    double temperature_start = 1.0;
    double temperature_end = 0.5;
    double kl_weight_max = 1.0;
    double capacity_max = 5.0;  // nats
};

struct ScheduleValue {
    double temperature;
    double kl_weight;
    double capacity;
};

/// softmax((logits + noise) / temperature). Throws std::invalid_argument on non-finite input,
/// size mismatch or temperature <= 0.
std::vector<double> sample_relaxed(std::span<const double> logits, std::span<const double> noise,
                                   double temperature);

/// One-hot at the argmax; ties go to the lowest index.
std::vector<double> harden(std::span<const double> relaxed);

/// KL(p || Cat(1/K)) in nats.
double kl_to_uniform(std::span<const double> probs);

/// Mean over the batch of max(0, total_b - capacity). Throws on an empty batch.
double capacity_penalty(std::span<const double> per_sample_kl_totals, double capacity);

ScheduleValue schedule_value(const CapacitySchedule& schedule, int epoch, int total_epochs);

/// Standard Gumbel draw from a uniform variate u in (0, 1).
double gumbel_from_uniform(double u);

/// Deterministic reference vectors shared with the encoder implementation.
nlohmann::json reference_fixtures();

}  // namespace charl::relax
