#include "charl/discovery.hpp"

#include "charl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace charl {

namespace {

constexpr double kConstantVariance = 1e-12;

bool siblings(LaggedNode a, LaggedNode b) {
    return a.lag == b.lag && a.prop.variable == b.prop.variable && a.prop.category != b.prop.category;
}

bool link_order(const LaggedLink& a, const LaggedLink& b) {
    return std::tie(a.src, a.dst, a.lag) < std::tie(b.src, b.dst, b.lag);
}

}  // namespace

void DiscoveryConfig::validate() const {
    if (tau_max < 1) throw ConfigError("discovery: tau_max must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("discovery: alpha must lie in (0, 1)");
    if (max_parents < 0) throw ConfigError("discovery: max_parents must be >= 0");
    if (iterations < 0) throw ConfigError("discovery: iterations must be >= 0");
    if (!(prune_threshold >= 0.0)) throw ConfigError("discovery: prune threshold must be >= 0");
}

LaggedSamples::LaggedSamples(const std::vector<const Segment*>& segments, int depth) : depth_(depth) {
    if (segments.empty()) throw DataError("discovery: no segments");
    if (depth < 1) throw DataError("discovery: lag depth must be >= 1");
    num_variables_ = segments.front()->num_variables();
    num_categories_ = segments.front()->num_categories();
    num_props_ = segments.front()->width();

    struct RowRef {
        std::size_t segment;
        std::size_t t;
    };
    std::vector<RowRef> refs;
    std::set<std::pair<const BinaryTrace*, std::size_t>> seen;
    const auto d = static_cast<std::size_t>(depth);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const Segment& seg = *segments[s];
        if (seg.width() != num_props_ || seg.num_categories() != num_categories_)
            throw DataError("discovery: segments disagree on latent dimensions");
        if (seg.length() <= d) continue;
        for (std::size_t t = d; t < seg.length(); ++t)
            if (seen.emplace(seg.trace().get(), seg.offset() + t).second) refs.push_back({s, t});
    }
    rows_ = refs.size();

    const std::size_t cols = (d + 1) * num_props_;
    data_.resize(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols));
    std::size_t r = 0;
    for (std::size_t s = 0; s < segments.size() && r < rows_; ++s) {
        if (refs[r].segment != s) continue;
        const SegmentView view = segments[s]->view();
        for (; r < rows_ && refs[r].segment == s; ++r) {
            for (std::size_t lag = 0; lag <= d; ++lag) {
                const auto row = view.row(refs[r].t - lag);
                for (std::size_t m = 0; m < num_props_; ++m)
                    data_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(lag * num_props_ + m)) = row[m];
            }
        }
    }
    if (rows_ > 0) {
        const Eigen::MatrixXd centred = data_.rowwise() - data_.colwise().mean();
        gram_ = centred.transpose() * centred;
    } else {
        gram_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols));
    }
}

std::span<const double> LaggedSamples::column(LaggedNode node) const {
    const auto c = static_cast<Eigen::Index>(column_index(node));
    return {data_.col(c).data(), rows_};
}

bool LaggedSamples::is_constant(Proposition p) const {
    const auto c = static_cast<Eigen::Index>(column_index({p, 0}));
    return gram_(c, c) <= kConstantVariance;
}

std::vector<LaggedNode> cap_siblings(LaggedNode x, std::vector<LaggedNode> conditions, int num_categories) {
    const long allowed = std::max(0, num_categories - 2);
    long count = std::count_if(conditions.begin(), conditions.end(), [&](LaggedNode z) { return siblings(x, z); });
    for (auto it = conditions.end(); count > allowed && it != conditions.begin();) {
        --it;
        if (siblings(x, *it)) {
            it = conditions.erase(it);
            --count;
        }
    }
    return conditions;
}

std::vector<ParentLink> select_parents(const LaggedSamples& samples, Proposition target,
                                       const DiscoveryConfig& config, std::vector<std::string>* warnings) {
    config.validate();
    if (config.tau_max > samples.depth())
        throw DataError("select_parents: samples do not cover lags up to tau_max");
    if (samples.is_constant(target)) return {};

    const auto& gram = samples.gram();
    const std::size_t n = samples.rows();
    const std::size_t y = samples.column_index({target, 0});
    const auto variance = [&](LaggedNode node) {
        const auto c = static_cast<Eigen::Index>(samples.column_index(node));
        return gram(c, c);
    };

    std::size_t q = static_cast<std::size_t>(config.max_parents);
    while (q > 0 && n <= q + 3) --q;
    if (q < static_cast<std::size_t>(config.max_parents) && warnings) {
        warnings->push_back("parent selection for " + target.name() + ": conditioning size reduced to " +
                            std::to_string(q) + " for " + std::to_string(n) + " samples");
    }
    if (n <= 3) return {};

    std::vector<ParentLink> alive;
    for (int lag = 1; lag <= config.tau_max; ++lag) {
        for (std::size_t m = 0; m < samples.num_propositions(); ++m) {
            const LaggedNode node{Proposition::from_column(m, samples.num_categories()), lag};
            if (variance(node) <= kConstantVariance) continue;
            const auto res = parcorr_from_covariance(gram, samples.column_index(node), y, {}, n);
            if (res.degenerate || res.p_value > config.alpha) continue;
            alive.push_back({node, std::abs(res.r), res.r, res.p_value});
        }
    }

    const auto by_score = [](const ParentLink& a, const ParentLink& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    };
    const long max_siblings = std::max(0, samples.num_categories() - 2);

    for (int pass = 0; pass < config.iterations && q > 0 && alive.size() > 1; ++pass) {
        std::sort(alive.begin(), alive.end(), by_score);
        std::vector<char> drop(alive.size(), 0);
        bool any = false;
        for (std::size_t i = 0; i < alive.size(); ++i) {
            std::vector<std::size_t> conds;
            long sibling_count = 0;
            for (std::size_t j = 0; j < alive.size() && conds.size() < q; ++j) {
                if (j == i) continue;
                if (siblings(alive[i].node, alive[j].node)) {
                    if (sibling_count >= max_siblings) continue;
                    ++sibling_count;
                }
                conds.push_back(samples.column_index(alive[j].node));
            }
            const auto res = parcorr_from_covariance(gram, samples.column_index(alive[i].node), y, conds, n);
            alive[i].score = std::min(alive[i].score, std::abs(res.r));
            alive[i].statistic = res.r;
            alive[i].p_value = res.p_value;
            if (res.degenerate || res.p_value > config.alpha) {
                drop[i] = 1;
                any = true;
            }
        }
        if (!any) break;
        std::vector<ParentLink> kept;
        for (std::size_t i = 0; i < alive.size(); ++i)
            if (!drop[i]) kept.push_back(alive[i]);
        alive = std::move(kept);
    }
    std::sort(alive.begin(), alive.end(), by_score);
    return alive;
}

ClassGraph discover_class_graph(const std::vector<const Segment*>& segments, const std::string& activity,
                                const DiscoveryConfig& config) {
    config.validate();
    if (segments.empty()) throw DataError("discovery for '" + activity + "': no segments");
    const std::size_t length = segments.front()->length();
    if (length <= static_cast<std::size_t>(config.tau_max))
        throw DataError("discovery for '" + activity + "': segment length must exceed tau_max");

    const int depth = std::min(2 * config.tau_max, static_cast<int>(length) - 1);
    const LaggedSamples samples(segments, depth);
    if (samples.rows() < config.min_samples) {
        throw DataError("discovery for '" + activity + "': only " + std::to_string(samples.rows()) +
                        " samples (minimum " + std::to_string(config.min_samples) + ")");
    }

    ClassGraph graph;
    graph.activity = activity;
    graph.tau_max = config.tau_max;
    graph.alpha = config.alpha;
    graph.threshold = config.prune_threshold;
    graph.sample_count = samples.rows();

    const std::size_t num_props = samples.num_propositions();
    const int k = samples.num_categories();
    std::vector<Proposition> props;
    for (std::size_t m = 0; m < num_props; ++m) {
        const auto p = Proposition::from_column(m, k);
        props.push_back(p);
        if (samples.is_constant(p)) graph.constant_propositions.push_back(p);
    }
    const auto is_const = [&](Proposition p) {
        return std::binary_search(graph.constant_propositions.begin(), graph.constant_propositions.end(), p);
    };

    std::vector<std::vector<ParentLink>> parents(num_props);
    std::vector<std::vector<std::string>> parent_warnings(num_props);
    parallel_for(num_props, [&](std::size_t m) {
        parents[m] = select_parents(samples, props[m], config, &parent_warnings[m]);
    });
    for (auto& w : parent_warnings) graph.warnings.insert(graph.warnings.end(), w.begin(), w.end());

    struct TargetResult {
        std::vector<LaggedLink> links;
        std::size_t pseudo = 0;
        std::size_t degenerate = 0;
    };
    std::vector<TargetResult> results(num_props);
    const auto& gram = samples.gram();
    const std::size_t n = samples.rows();

    parallel_for(num_props, [&](std::size_t m) {
        const Proposition dst = props[m];
        if (is_const(dst)) return;
        auto& out = results[m];
        const std::size_t y = samples.column_index({dst, 0});
        for (const Proposition src : props) {
            if (is_const(src)) continue;
            const auto src_column = src.column(k);
            for (int lag = 1; lag <= config.tau_max; ++lag) {
                const LaggedNode x{src, lag};
                std::vector<LaggedNode> conds;
                const auto add = [&](LaggedNode z) {
                    if (z == x || z.lag > depth) return;
                    const auto c = static_cast<Eigen::Index>(samples.column_index(z));
                    if (gram(c, c) <= kConstantVariance) return;
                    if (std::find(conds.begin(), conds.end(), z) == conds.end()) conds.push_back(z);
                };
                for (const auto& p : parents[m]) add(p.node);
                for (const auto& p : parents[src_column]) add({p.node.prop, p.node.lag + lag});
                conds = cap_siblings(x, std::move(conds), k);
                while (!conds.empty() && n <= conds.size() + 3) conds.pop_back();

                std::vector<std::size_t> cols;
                cols.reserve(conds.size());
                for (const auto& z : conds) cols.push_back(samples.column_index(z));
                const auto res = parcorr_from_covariance(gram, samples.column_index(x), y, cols, n);
                if (res.pseudo_inverse) ++out.pseudo;
                if (res.degenerate) {
                    ++out.degenerate;
                    continue;
                }
                if (res.p_value <= config.alpha && res.r != 0.0 && std::abs(res.r) >= config.prune_threshold)
                    out.links.push_back({src, dst, lag, res.r, res.p_value});
            }
        }
    });

    for (const auto& r : results) {
        graph.links.insert(graph.links.end(), r.links.begin(), r.links.end());
        graph.pseudo_inverse_tests += r.pseudo;
        graph.degenerate_tests += r.degenerate;
    }
    std::sort(graph.links.begin(), graph.links.end(), link_order);
    return graph;
}

ClassGraph prune(const ClassGraph& graph, double threshold) {
    if (!(threshold >= 0.0)) throw ConfigError("prune: threshold must be >= 0");
    ClassGraph out = graph;
    out.links.clear();
    for (const auto& link : graph.links)
        if (std::abs(link.strength) >= threshold) out.links.push_back(link);
    out.threshold = std::max(graph.threshold, threshold);
    return out;
}

nlohmann::json to_json(const ClassGraph& graph) {
    nlohmann::json links = nlohmann::json::array();
    for (const auto& l : graph.links) {
        links.push_back({{"src", l.src.name()},
                         {"dst", l.dst.name()},
                         {"lag", l.lag},
                         {"strength", l.strength},
                         {"p_value", l.p_value}});
    }
    nlohmann::json constant = nlohmann::json::array();
    for (const auto& p : graph.constant_propositions) constant.push_back(p.name());
    return {{"activity", graph.activity},
            {"tau_max", graph.tau_max},
            {"alpha", graph.alpha},
            {"threshold", graph.threshold},
            {"sample_count", graph.sample_count},
            {"constant_propositions", constant},
            {"pseudo_inverse_tests", graph.pseudo_inverse_tests},
            {"degenerate_tests", graph.degenerate_tests},
            {"warnings", graph.warnings},
            {"links", links}};
}

ClassGraph class_graph_from_json(const nlohmann::json& j) {
    try {
        ClassGraph g;
        g.activity = j.at("activity").get<std::string>();
        g.tau_max = j.at("tau_max").get<int>();
        g.alpha = j.at("alpha").get<double>();
        g.threshold = j.value("threshold", 0.0);
        g.sample_count = j.value("sample_count", std::size_t{0});
        for (const auto& p : j.value("constant_propositions", nlohmann::json::array()))
            g.constant_propositions.push_back(parse_proposition(p.get<std::string>()));
        g.pseudo_inverse_tests = j.value("pseudo_inverse_tests", std::size_t{0});
        g.degenerate_tests = j.value("degenerate_tests", std::size_t{0});
        g.warnings = j.value("warnings", std::vector<std::string>{});
        for (const auto& l : j.at("links")) {
            LaggedLink link{parse_proposition(l.at("src").get<std::string>()),
                            parse_proposition(l.at("dst").get<std::string>()), l.at("lag").get<int>(),
                            l.at("strength").get<double>(), l.at("p_value").get<double>()};
            if (link.lag < 1 || link.lag > g.tau_max || std::abs(link.strength) > 1.0 || link.p_value < 0.0 ||
                link.p_value > 1.0)
                throw DataError("class graph '" + g.activity + "': link out of range");
            g.links.push_back(link);
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("class graph: ") + e.what());
    }
}

}  // namespace charl
