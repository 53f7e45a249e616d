#pragma once

#include "charl/rules.hpp"
#include "charl/trace.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace charl {

struct ClassScore {
    std::string activity;
    double rule_score = 0.0;
    std::optional<double> fallback_score;
    bool used_fallback = false;
    /// The class had rules but every weight was zero, so they were averaged uniformly.
    bool uniform_weights = false;

    double value() const { return used_fallback ? *fallback_score : rule_score; }
};

struct ScoringOptions {
    double fallback_weight = 1.0;
    /// Share of each class's ranked rules that take part in scoring (at least one).
    double core_fraction = 1.0;
};

/// h ln(p_in / p_out) + (n - h) ln((1 - p_in) / (1 - p_out)).
double llr(double p_in, double p_out, ltl::RuleCounts counts);
double rule_llr(const TemporalRule& rule, const SegmentView& segment);

/// Mean of each indicator column over the segment.
std::vector<double> mean_activations(const SegmentView& segment);

/// Number of ranked rules used for scoring a class with `available` rules.
std::size_t core_size(std::size_t available, double core_fraction);

std::vector<ClassScore> score_classes(const RuleBase& rb, const SegmentView& segment,
                                      const ScoringOptions& options = {});
/// Index into rb.activities of the best score; ties go to the earlier activity.
std::size_t predict_index(const std::vector<ClassScore>& scores);
std::string predict(const RuleBase& rb, const SegmentView& segment, const ScoringOptions& options = {});

/// Per-activity mean of per-segment mean activations, in train.activities order.
std::vector<std::vector<double>> fit_prototypes(const LabeledDataset& train);

struct Prediction {
    std::string source_id;
    std::size_t start_time = 0;
    std::string label;
    std::string predicted;
    bool used_fallback = false;
};

/// Classifies every segment (in parallel, results in segment order).
std::vector<Prediction> classify(const RuleBase& rb, const LabeledDataset& data, const ScoringOptions& options = {});

/// Replaces each prediction by the most frequent label in the centred window of `window`
/// consecutive predictions of the same source; ties keep the earliest label in the window.
std::vector<Prediction> majority_vote(const std::vector<Prediction>& predictions, std::size_t window);

struct EvaluationReport {
    std::vector<std::string> activities;
    /// confusion[true][predicted]
    std::vector<std::vector<long>> confusion;
    std::vector<double> precision;
    std::vector<double> recall;
    double accuracy = 0.0;
    long segment_count = 0;
    long fallback_decisions = 0;
};

/// Tallies predictions against labels. Precision of a never-predicted class is reported as 0.
EvaluationReport tally(const std::vector<std::string>& activities, const std::vector<Prediction>& predictions);
EvaluationReport evaluate(const RuleBase& rb, const LabeledDataset& test, const ScoringOptions& options = {});

nlohmann::json to_json(const EvaluationReport& report);
nlohmann::json to_json(const std::vector<Prediction>& predictions);
std::vector<Prediction> predictions_from_json(const nlohmann::json& j);
/// Plain-text confusion matrix: true labels down the side, predictions across the top.
std::string confusion_table(const EvaluationReport& report);

}  // namespace charl
