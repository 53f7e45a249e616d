#include "charl/pipeline.hpp"

#include "charl/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace charl {

namespace {

auto as_tuple(const PipelineConfig& c) {
    return std::tie(c.segment_length, c.hop, c.classifier_stride, c.tau_max, c.alpha, c.prune_threshold,
                    c.filter_threshold, c.rule_budget, c.core_fraction, c.fallback_weight, c.train_fraction,
                    c.seed, c.num_categories, c.max_parents, c.selection_iterations, c.min_total_rules,
                    c.vote_window);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
void read_field(const nlohmann::json& value, const std::string& key, T& field) {
    try {
        if constexpr (std::is_unsigned_v<T>) {
            if (value.is_number_integer() && value.get<long long>() < 0)
                throw ConfigError("config field '" + key + "' must not be negative");
            if (!value.is_number_integer()) throw ConfigError("config field '" + key + "' must be an integer");
        } else if constexpr (std::is_integral_v<T>) {
            if (!value.is_number_integer()) throw ConfigError("config field '" + key + "' must be an integer");
        } else {
            if (!value.is_number()) throw ConfigError("config field '" + key + "' must be a number");
        }
        field = value.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config field '" + key + "': " + e.what());
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (tau_max < 1) throw ConfigError("tau_max must be >= 1");
    if (segment_length <= static_cast<std::size_t>(tau_max))
        throw ConfigError("segment_length must exceed tau_max");
    if (hop < 1) throw ConfigError("hop must be >= 1");
    if (classifier_stride < 1) throw ConfigError("classifier_stride must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(prune_threshold >= 0.0)) throw ConfigError("prune_threshold must be >= 0");
    if (!(filter_threshold >= 0.0)) throw ConfigError("filter_threshold must be >= 0");
    if (!(core_fraction > 0.0 && core_fraction <= 1.0)) throw ConfigError("core_fraction must lie in (0, 1]");
    if (!(fallback_weight >= 0.0)) throw ConfigError("fallback_weight must be >= 0");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0, 1); the test part must not be empty");
    if (num_categories < 2) throw ConfigError("num_categories must be >= 2");
    if (max_parents < 0) throw ConfigError("max_parents must be >= 0");
    if (selection_iterations < 0) throw ConfigError("selection_iterations must be >= 0");
    if (vote_window < 1) throw ConfigError("vote_window must be >= 1");
}

DiscoveryConfig PipelineConfig::discovery() const {
    DiscoveryConfig d;
    d.tau_max = tau_max;
    d.alpha = alpha;
    d.max_parents = max_parents;
    d.iterations = selection_iterations;
    // Graphs are cached unpruned; the extraction threshold is applied afterwards.
    d.prune_threshold = 0.0;
    return d;
}

bool config_less(const PipelineConfig& a, const PipelineConfig& b) { return as_tuple(a) < as_tuple(b); }

nlohmann::json to_json(const PipelineConfig& c) {
    return {{"segment_length", c.segment_length},
            {"hop", c.hop},
            {"classifier_stride", c.classifier_stride},
            {"tau_max", c.tau_max},
            {"alpha", c.alpha},
            {"prune_threshold", c.prune_threshold},
            {"filter_threshold", c.filter_threshold},
            {"rule_budget", c.rule_budget},
            {"core_fraction", c.core_fraction},
            {"fallback_weight", c.fallback_weight},
            {"train_fraction", c.train_fraction},
            {"seed", c.seed},
            {"num_categories", c.num_categories},
            {"max_parents", c.max_parents},
            {"selection_iterations", c.selection_iterations},
            {"min_total_rules", c.min_total_rules},
            {"vote_window", c.vote_window}};
}

PipelineConfig config_from_json(const nlohmann::json& j, const PipelineConfig& defaults) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c = defaults;
    for (const auto& [key, value] : j.items()) {
        if (key == "segment_length") read_field(value, key, c.segment_length);
        else if (key == "hop") read_field(value, key, c.hop);
        else if (key == "classifier_stride") read_field(value, key, c.classifier_stride);
        else if (key == "tau_max") read_field(value, key, c.tau_max);
        else if (key == "alpha") read_field(value, key, c.alpha);
        else if (key == "prune_threshold") read_field(value, key, c.prune_threshold);
        else if (key == "filter_threshold") read_field(value, key, c.filter_threshold);
        else if (key == "rule_budget") read_field(value, key, c.rule_budget);
        else if (key == "core_fraction") read_field(value, key, c.core_fraction);
        else if (key == "fallback_weight") read_field(value, key, c.fallback_weight);
        else if (key == "train_fraction") read_field(value, key, c.train_fraction);
        else if (key == "seed") read_field(value, key, c.seed);
        else if (key == "num_categories") read_field(value, key, c.num_categories);
        else if (key == "max_parents") read_field(value, key, c.max_parents);
        else if (key == "selection_iterations") read_field(value, key, c.selection_iterations);
        else if (key == "min_total_rules") read_field(value, key, c.min_total_rules);
        else if (key == "vote_window") read_field(value, key, c.vote_window);
        else throw ConfigError("unknown config field '" + key + "'");
    }
    c.validate();
    return c;
}

std::string dataset_fingerprint(const std::vector<CategoricalTrace>& traces) {
    std::string blob;
    for (const auto& t : traces) {
        blob += activity_of(t);
        blob += '\x1f';
        blob += t.source_id();
        blob += '\x1f';
        blob += std::to_string(t.num_variables()) + ',' + std::to_string(t.num_categories()) + ',' +
                std::to_string(t.length()) + ',' + std::to_string(t.start_time());
        blob += '\x1e';
        for (int v : t.values()) blob += static_cast<char>(v);
        blob += '\x1d';
    }
    return digest(blob);
}

std::string graph_fingerprint(const ClassGraph& graph) { return digest(to_json(graph).dump()); }

GraphCache::Graphs GraphCache::get_or_compute(const std::string& key, const std::function<Graphs()>& compute) {
    std::promise<Graphs> promise;
    std::shared_future<Graphs> future;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        const auto it = entries_.find(key);
        if (it != entries_.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            entries_.emplace(key, future);
            owner = true;
        }
    }
    if (owner) {
        try {
            ++calls_;
            promise.set_value(compute());
        } catch (...) {
            // Waiters see the same failure; later requests retry.
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mutex_);
            entries_.erase(key);
        }
    }
    return future.get();
}

std::size_t GraphCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string graph_cache_key(const std::string& dataset_digest, const PipelineConfig& c) {
    return dataset_digest + "|L=" + std::to_string(c.segment_length) + "|hop=" + std::to_string(c.hop) +
           "|train=" + fmt(c.train_fraction) + "|tau=" + std::to_string(c.tau_max) + "|alpha=" + fmt(c.alpha) +
           "|q=" + std::to_string(c.max_parents) + "|it=" + std::to_string(c.selection_iterations) +
           "|K=" + std::to_string(c.num_categories);
}

StageError::StageError(std::string stage, const std::string& message)
    : DataError(stage + ": " + message), stage_(std::move(stage)) {}

std::vector<ClassGraph> discover_graphs(const LabeledDataset& train, const PipelineConfig& config) {
    const DiscoveryConfig dc = config.discovery();
    std::vector<ClassGraph> graphs;
    for (const auto& activity : train.activities)
        graphs.push_back(discover_class_graph(train.segments_of(activity), activity, dc));
    return graphs;
}

RuleBase fit_rulebase(const LabeledDataset& train, const std::vector<ClassGraph>& graphs,
                      const PipelineConfig& config) {
    if (train.segments.empty()) throw DataError("no training segments");
    if (graphs.size() != train.activities.size()) throw DataError("one class graph per activity is required");
    const CountTable table(train, config.tau_max);
    RuleBase rb;
    rb.num_variables = train.segments.front().num_variables();
    rb.num_categories = train.segments.front().num_categories();
    rb.activities = train.activities;
    for (std::size_t a = 0; a < train.activities.size(); ++a) {
        if (graphs[a].activity != train.activities[a])
            throw DataError("class graph for '" + graphs[a].activity + "' is out of order");
        std::vector<TemporalRule> candidates;
        for (const auto& link : graphs[a].links) {
            if (link.strength == 0.0) continue;
            candidates.push_back(estimate(translate(link, train.activities[a]), table));
        }
        rb.rules.push_back(select(std::move(candidates), config.rule_budget));
    }
    rb.prototypes.assign(rb.activities.size(), std::nullopt);
    const bool needs_prototypes =
        std::any_of(rb.rules.begin(), rb.rules.end(), [](const auto& r) { return r.empty(); });
    if (needs_prototypes) {
        auto protos = fit_prototypes(train);
        for (std::size_t a = 0; a < rb.activities.size(); ++a)
            if (rb.rules[a].empty()) rb.prototypes[a] = std::move(protos[a]);
    }
    rb.fingerprint = digest(to_json(rb).dump());
    rb.validate();
    return rb;
}

namespace {

template <class F>
auto run_stage(const PipelineHooks& hooks, const char* name, F&& body) {
    if (hooks.on_stage) hooks.on_stage(name);
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const std::vector<CategoricalTrace>& traces, const PipelineConfig& config,
                            GraphCache* cache, const PipelineHooks& hooks) {
    config.validate();
    if (traces.empty()) throw DataError("no traces");

    const auto split = run_stage(hooks, "split", [&] {
        return chrono_split(traces, config.train_fraction, config.segment_length);
    });
    auto [train, test] = run_stage(hooks, "segment", [&] {
        return std::pair(build_dataset(split.train, config.segment_length, config.hop),
                         build_dataset(split.test, config.segment_length, config.classifier_stride));
    });
    if (hooks.on_segmented) hooks.on_segmented(train, test);

    PipelineResult result;
    const auto graphs = run_stage(hooks, "discover", [&] {
        if (!cache) return discover_graphs(train, config);
        return cache->get_or_compute(graph_cache_key(dataset_fingerprint(traces), config),
                                     [&] { return discover_graphs(train, config); });
    });
    for (const auto& g : graphs) {
        result.graphs.push_back(prune(g, config.prune_threshold));
        result.filtered_graphs.push_back(prune(g, config.filter_threshold));
    }

    result.rulebase = run_stage(hooks, "extract", [&] { return fit_rulebase(train, result.graphs, config); });

    run_stage(hooks, "evaluate", [&] {
        auto predictions = classify(result.rulebase, test, config.scoring());
        if (config.vote_window > 1) predictions = majority_vote(predictions, config.vote_window);
        result.report = tally(result.rulebase.activities, predictions);
        result.predictions = std::move(predictions);
        return 0;
    });
    return result;
}

SearchResult search(const std::vector<CategoricalTrace>& traces, const std::vector<PipelineConfig>& grid,
                    GraphCache* cache) {
    if (grid.empty()) throw ConfigError("search grid is empty");
    GraphCache local;
    if (!cache) cache = &local;

    std::vector<std::optional<PipelineResult>> results(grid.size());
    std::vector<ConfigOutcome> table(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        table[i].config = grid[i];
        try {
            results[i] = run_pipeline(traces, grid[i], cache);
            table[i].accuracy = results[i]->report.accuracy;
            table[i].total_rules = results[i]->rulebase.total_rules();
            table[i].eligible = table[i].total_rules >= grid[i].min_total_rules;
        } catch (const std::exception& e) {
            table[i].error = e.what();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!table[i].eligible) continue;
        if (!best || *table[i].accuracy > *table[*best].accuracy ||
            (*table[i].accuracy == *table[*best].accuracy && config_less(table[i].config, table[*best].config)))
            best = i;
    }
    if (!best) {
        std::string reason = table.front().error.empty() ? "too few rules selected" : table.front().error;
        throw DataError("search: no eligible configuration (first: " + reason + ")");
    }

    SearchResult out;
    out.best_index = *best;
    out.table = std::move(table);
    out.best = std::move(*results[*best]);
    out.seed = out.best_config().seed;
    for (const auto& g : out.best.graphs) out.graph_fingerprints.push_back(graph_fingerprint(g));
    return out;
}

std::vector<PipelineConfig> default_grid(const PipelineConfig& base) {
    return expand_grid(base, {{"segment_length", {60, 80, 100}},
                              {"hop", {10, 25}},
                              {"rule_budget", {5, 10, 15}},
                              {"prune_threshold", {0.0, 0.05, 0.1}}});
}

std::vector<PipelineConfig> expand_grid(const PipelineConfig& base, const nlohmann::json& axes) {
    if (!axes.is_object()) throw ConfigError("grid must be a JSON object of field -> list of values");
    std::vector<nlohmann::json> combos{to_json(base)};
    for (const auto& [key, values] : axes.items()) {
        if (!values.is_array() || values.empty())
            throw ConfigError("grid axis '" + key + "' must be a non-empty list");
        std::vector<nlohmann::json> next;
        for (const auto& c : combos)
            for (const auto& v : values) {
                auto copy = c;
                copy[key] = v;
                next.push_back(std::move(copy));
            }
        combos = std::move(next);
    }
    std::vector<PipelineConfig> grid;
    for (const auto& c : combos) grid.push_back(config_from_json(c));
    return grid;
}

nlohmann::json to_json(const SearchResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& o : result.table)
        rows.push_back({{"config", to_json(o.config)},
                        {"accuracy", o.accuracy ? nlohmann::json(*o.accuracy) : nlohmann::json()},
                        {"total_rules", o.total_rules},
                        {"eligible", o.eligible},
                        {"error", o.error}});
    return {{"seed", result.seed},
            {"best_index", result.best_index},
            {"best_config", to_json(result.best_config())},
            {"best_accuracy", result.best.report.accuracy},
            {"rulebase_fingerprint", result.best.rulebase.fingerprint},
            {"graph_fingerprints", result.graph_fingerprints},
            {"table", rows},
            {"report", to_json(result.best.report)}};
}

}  // namespace charl
