#pragma once

#include "charl/classifier.hpp"
#include "charl/discovery.hpp"
#include "charl/rules.hpp"
#include "charl/trace.hpp"

#include <atomic>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace charl {

struct PipelineConfig {
    std::size_t segment_length = 80;
    std::size_t hop = 10;
    std::size_t classifier_stride = 75;
    int tau_max = 5;
    double alpha = 0.05;
    /// Edge-strength floor for rule extraction.
    double prune_threshold = 0.0;
    /// Edge-strength floor for the filtered graph summaries only.
    double filter_threshold = 0.1;
    std::size_t rule_budget = 15;
    double core_fraction = 1.0;
    double fallback_weight = 1.0;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    int num_categories = 4;
    int max_parents = 3;
    int selection_iterations = 3;
    /// Configurations selecting fewer rules than this in total cannot win a search.
    std::size_t min_total_rules = 1;
    /// Window of the optional majority vote over consecutive predictions; 1 disables it.
    std::size_t vote_window = 1;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
    DiscoveryConfig discovery() const;
    ScoringOptions scoring() const { return {fallback_weight, core_fraction}; }
    bool operator==(const PipelineConfig&) const = default;
};

/// Strict lexicographic order over all fields, used to break ties between configurations.
bool config_less(const PipelineConfig& a, const PipelineConfig& b);

nlohmann::json to_json(const PipelineConfig& config);
/// Missing fields take their defaults; unknown fields are rejected with ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, const PipelineConfig& defaults = {});

/// Digest of trace contents and labels; keys the graph cache.
std::string dataset_fingerprint(const std::vector<CategoricalTrace>& traces);
std::string graph_fingerprint(const ClassGraph& graph);

/// Class graphs shared across configurations that agree on segmentation, split and discovery
/// settings. Each key is computed once; concurrent requests for it wait for the first.
class GraphCache {
public:
    using Graphs = std::vector<ClassGraph>;

    Graphs get_or_compute(const std::string& key, const std::function<Graphs()>& compute);
    std::size_t discovery_calls() const { return calls_.load(); }
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_future<Graphs>> entries_;
    std::atomic<std::size_t> calls_{0};
};

std::string graph_cache_key(const std::string& dataset_digest, const PipelineConfig& config);

/// Observation points for tests and logging.
struct PipelineHooks {
    /// Called with the stage name just before the stage runs.
    std::function<void(std::string_view)> on_stage;
    /// Called once both partitions are segmented, before anything reads them.
    std::function<void(LabeledDataset& train, LabeledDataset& test)> on_segmented;
};

/// Failure of one pipeline stage; the stage name prefixes the message.
class StageError : public DataError {
public:
    StageError(std::string stage, const std::string& message);
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct PipelineResult {
    RuleBase rulebase;
    EvaluationReport report;
    std::vector<Prediction> predictions;
    /// Class graphs at the extraction threshold, in activity order.
    std::vector<ClassGraph> graphs;
    /// The same graphs pruned at the summary threshold.
    std::vector<ClassGraph> filtered_graphs;
};

/// Discovery over every activity of `train`, in activity order.
std::vector<ClassGraph> discover_graphs(const LabeledDataset& train, const PipelineConfig& config);

/// Translate, estimate and select rules from `graphs` (already at the extraction threshold) and
/// fit prototypes for activities left without rules.
RuleBase fit_rulebase(const LabeledDataset& train, const std::vector<ClassGraph>& graphs,
                      const PipelineConfig& config);

PipelineResult run_pipeline(const std::vector<CategoricalTrace>& traces, const PipelineConfig& config,
                            GraphCache* cache = nullptr, const PipelineHooks& hooks = {});

struct ConfigOutcome {
    PipelineConfig config;
    std::optional<double> accuracy;
    std::size_t total_rules = 0;
    bool eligible = false;
    std::string error;
};

struct SearchResult {
    std::size_t best_index = 0;
    std::vector<ConfigOutcome> table;
    PipelineResult best;
    std::uint64_t seed = 0;
    std::vector<std::string> graph_fingerprints;

    const PipelineConfig& best_config() const { return table[best_index].config; }
};

/// Evaluates every configuration in parallel, sharing class graphs through `cache`. The best
/// eligible configuration by held-out accuracy wins, ties going to the config_less-smaller one.
/// Throws DataError when no configuration is eligible.
SearchResult search(const std::vector<CategoricalTrace>& traces, const std::vector<PipelineConfig>& grid,
                    GraphCache* cache = nullptr);

/// L in {60, 80, 100} x hop in {10, 25} x budget in {5, 10, 15} x prune threshold in {0, 0.05, 0.1},
/// other fields from `base`.
std::vector<PipelineConfig> default_grid(const PipelineConfig& base = {});

/// Cartesian product of `axes` (field name -> list of values) applied over `base`, with the
/// axes varied in sorted-name order.
std::vector<PipelineConfig> expand_grid(const PipelineConfig& base, const nlohmann::json& axes);

nlohmann::json to_json(const SearchResult& result);

}  // namespace charl
