#pragma once

#include "charl/parcorr.hpp"
#include "charl/proposition.hpp"
#include "charl/trace.hpp"

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace charl {

/// Signed lagged dependency: src at t - lag influences dst at t.
struct LaggedLink {
    Proposition src;
    Proposition dst;
    int lag = 1;
    /// MCI partial correlation; the sign is the polarity of the influence.
    double strength = 0.0;
    double p_value = 1.0;

    bool operator==(const LaggedLink&) const = default;
};

struct ClassGraph {
    std::string activity;
    std::vector<LaggedLink> links;
    int tau_max = 5;
    double alpha = 0.05;
    /// Minimum |strength| every retained link satisfies.
    double threshold = 0.0;
    std::size_t sample_count = 0;
    /// Propositions that never vary within the class; their links are skipped.
    std::vector<Proposition> constant_propositions;
    std::size_t pseudo_inverse_tests = 0;
    std::size_t degenerate_tests = 0;
    std::vector<std::string> warnings;
};

struct DiscoveryConfig {
    int tau_max = 5;
    double alpha = 0.05;
    /// Conditioning set size q of the parent-selection tests.
    int max_parents = 3;
    /// Conditional passes of parent selection after the unconditional screen.
    int iterations = 3;
    /// Links with |strength| below this are not retained.
    double prune_threshold = 0.0;
    std::size_t min_samples = 20;

    void validate() const;
};

/// A lagged candidate (proposition observed `lag` steps before the target).
struct LaggedNode {
    Proposition prop;
    int lag = 0;
    auto operator<=>(const LaggedNode&) const = default;
};

struct ParentLink {
    LaggedNode node;
    /// Weakest |statistic| observed across the selection tests (ranking score).
    double score = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Sample matrix of every proposition at lags 0..depth, pooled over segments. A row is a
/// target time t such that t - depth lies in the same segment; rows are de-duplicated by
/// (trace, t) so overlapping segments contribute each time step once.
class LaggedSamples {
public:
    LaggedSamples(const std::vector<const Segment*>& segments, int depth);

    std::size_t rows() const { return rows_; }
    int depth() const { return depth_; }
    int num_variables() const { return num_variables_; }
    int num_categories() const { return num_categories_; }
    std::size_t num_propositions() const { return num_props_; }

    std::size_t column_index(LaggedNode node) const {
        return static_cast<std::size_t>(node.lag) * num_props_ + node.prop.column(num_categories_);
    }
    std::span<const double> column(LaggedNode node) const;
    bool is_constant(Proposition p) const;
    /// Centred Gram matrix over all (proposition, lag) columns.
    const Eigen::MatrixXd& gram() const { return gram_; }

private:
    std::size_t rows_ = 0;
    int depth_ = 0;
    int num_variables_ = 0;
    int num_categories_ = 0;
    std::size_t num_props_ = 0;
    Eigen::MatrixXd data_;  // rows x (depth + 1) * num_props, column-major
    Eigen::MatrixXd gram_;
};

/// PC1-style condition selection for `target` over candidates (any proposition, lag 1..tau_max).
std::vector<ParentLink> select_parents(const LaggedSamples& samples, Proposition target,
                                       const DiscoveryConfig& config,
                                       std::vector<std::string>* warnings = nullptr);

/// Two-stage discovery (parent selection, then MCI partial-correlation tests) over the
/// segments of one activity.
ClassGraph discover_class_graph(const std::vector<const Segment*>& segments, const std::string& activity,
                                const DiscoveryConfig& config);

/// Keeps links with |strength| >= threshold; the input is left untouched.
ClassGraph prune(const ClassGraph& graph, double threshold);

/// Drops from `conditions` the trailing same-time siblings of `x` so that at most K - 2 of
/// them remain; a set holding all K - 1 siblings would determine x exactly.
std::vector<LaggedNode> cap_siblings(LaggedNode x, std::vector<LaggedNode> conditions, int num_categories);

nlohmann::json to_json(const ClassGraph& graph);
ClassGraph class_graph_from_json(const nlohmann::json& j);

}  // namespace charl
