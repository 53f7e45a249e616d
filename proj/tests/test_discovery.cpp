#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "charl/discovery.hpp"
#include "charl/parallel.hpp"
#include "charl/synth.hpp"
#include "support.hpp"

#include <algorithm>

using namespace charl;
using charl::testing::random_trace;

namespace {

struct Fixture {
    std::vector<Segment> segments;
    std::vector<const Segment*> pointers() const {
        std::vector<const Segment*> out;
        for (const auto& s : segments) out.push_back(&s);
        return out;
    }
};

Fixture segmented(const CategoricalTrace& trace, std::size_t L, std::size_t hop) {
    auto bin = std::make_shared<const BinaryTrace>(to_one_hot(trace));
    Fixture f;
    for (auto& s : segment(bin, L, hop)) f.segments.emplace_back(s.trace(), s.offset(), s.length(), activity_of(trace));
    return f;
}

PlantedModel single_rule_model(Polarity polarity) {
    PlantedModel m;
    m.activities = {{"solo", {{{0, 1}, {2, 3}, 3, polarity, 0.95}}}};
    return m;
}

const LaggedLink* find_link(const ClassGraph& g, Proposition src, Proposition dst, int lag) {
    for (const auto& l : g.links)
        if (l.src == src && l.dst == dst && l.lag == lag) return &l;
    return nullptr;
}

}  // namespace

TEST_CASE("lagged samples pool segments without crossing or repeating rows") {
    Rng rng(1);
    const auto a = random_trace(rng, 20, 2, 3, "x");
    const auto b = random_trace(rng, 20, 2, 3, "x");
    const auto fa = segmented(a, 20, 20);
    const auto fb = segmented(b, 20, 20);
    std::vector<const Segment*> both{&fa.segments[0], &fb.segments[0]};
    const LaggedSamples s(both, 3);
    CHECK(s.rows() == 34);

    // Row r of the first segment is target time t = r + 3; lag 2 reads t - 2.
    const auto col = s.column({{1, a.at(1, 1)}, 2});
    CHECK(col[0] == 1.0);

    const auto c = random_trace(rng, 30, 2, 3, "x");
    const auto overlapping = segmented(c, 20, 10);
    REQUIRE(overlapping.segments.size() == 2);
    CHECK(LaggedSamples(overlapping.pointers(), 3).rows() == 27);
}

TEST_CASE("Gram matrix is the centred cross-product") {
    Rng rng(2);
    const auto f = segmented(random_trace(rng, 60, 2, 2, "x"), 60, 60);
    const LaggedSamples s(f.pointers(), 2);
    const auto x = s.column({{0, 1}, 1});
    const auto y = s.column({{1, 0}, 0});
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(s.rows());
    my /= static_cast<double>(s.rows());
    double sxy = 0;
    for (std::size_t i = 0; i < s.rows(); ++i) sxy += (x[i] - mx) * (y[i] - my);
    const auto i = static_cast<Eigen::Index>(s.column_index({{0, 1}, 1}));
    const auto j = static_cast<Eigen::Index>(s.column_index({{1, 0}, 0}));
    CHECK(s.gram()(i, j) == doctest::Approx(sxy));
}

TEST_CASE("sibling cap keeps at most K - 2 same-time siblings") {
    const LaggedNode x{{0, 0}, 2};
    std::vector<LaggedNode> conds{{{0, 1}, 2}, {{3, 1}, 1}, {{0, 2}, 2}, {{0, 3}, 2}, {{0, 1}, 3}};
    const auto capped = cap_siblings(x, conds, 4);
    CHECK(capped == std::vector<LaggedNode>{{{0, 1}, 2}, {{3, 1}, 1}, {{0, 2}, 2}, {{0, 1}, 3}});
    CHECK(cap_siblings(x, {{{0, 1}, 2}, {{0, 2}, 2}}, 4).size() == 2);
    CHECK(cap_siblings(x, {{{0, 1}, 2}}, 2).empty());
}

TEST_CASE("parent selection finds the planted driver") {
    const auto trace = synthesize(single_rule_model(Polarity::positive), 6000, 3).front();
    const auto f = segmented(trace, 6000, 6000);
    const LaggedSamples s(f.pointers(), 10);
    DiscoveryConfig cfg;
    const auto parents = select_parents(s, {2, 3}, cfg);
    REQUIRE_FALSE(parents.empty());
    CHECK(parents.front().node == LaggedNode{{0, 1}, 3});
    CHECK(parents.front().statistic > 0.0);
}

TEST_CASE("discovery recovers planted links with sign and lag") {
    for (auto polarity : {Polarity::positive, Polarity::negative}) {
        const auto trace = synthesize(single_rule_model(polarity), 7000, 11).front();
        const auto f = segmented(trace, 80, 10);
        const auto g = discover_class_graph(f.pointers(), "solo", DiscoveryConfig{});
        const auto* link = find_link(g, {0, 1}, {2, 3}, 3);
        REQUIRE(link != nullptr);
        CHECK((link->strength > 0.0) == (polarity == Polarity::positive));
        CHECK(link->p_value <= 0.05);
        CHECK(g.sample_count > 6000);
        CHECK(std::is_sorted(g.links.begin(), g.links.end(), [](const LaggedLink& a, const LaggedLink& b) {
            return std::tie(a.src, a.dst, a.lag) < std::tie(b.src, b.dst, b.lag);
        }));
        // Lags other than the planted one carry no strong dependency.
        for (int lag : {1, 2, 4, 5}) {
            const auto* other = find_link(g, {0, 1}, {2, 3}, lag);
            if (other) CHECK(std::abs(other->strength) < 0.1);
        }
    }
}

TEST_CASE("constant propositions are reported and skipped") {
    Rng rng(4);
    auto base = random_trace(rng, 800, 3, 3, "c");
    std::vector<int> values(base.values().begin(), base.values().end());
    for (std::size_t t = 0; t < 800; ++t) values[t * 3 + 2] = 1;
    const CategoricalTrace trace(values, 3, 3, "c", "c");
    const auto f = segmented(trace, 80, 40);
    const auto g = discover_class_graph(f.pointers(), "c", DiscoveryConfig{});
    CHECK(g.constant_propositions == std::vector<Proposition>{{2, 0}, {2, 1}, {2, 2}});
    for (const auto& l : g.links) {
        CHECK(l.src.variable != 2);
        CHECK(l.dst.variable != 2);
    }
}

TEST_CASE("identical graphs across thread counts") {
    const auto trace = synthesize(default_planted_model(), 3000, 5).front();
    const auto f = segmented(trace, 80, 10);
    set_thread_count(1);
    const auto one = to_json(discover_class_graph(f.pointers(), "a", DiscoveryConfig{})).dump();
    set_thread_count(6);
    const auto six = to_json(discover_class_graph(f.pointers(), "a", DiscoveryConfig{})).dump();
    CHECK(one == six);
}

TEST_CASE("pruning and JSON round trip") {
    const auto trace = synthesize(single_rule_model(Polarity::negative), 3000, 8).front();
    const auto f = segmented(trace, 80, 10);
    const auto g = discover_class_graph(f.pointers(), "solo", DiscoveryConfig{});
    const auto back = class_graph_from_json(to_json(g));
    CHECK(to_json(back) == to_json(g));
    CHECK(back.links == g.links);

    // full suppression of a 1-in-4 category caps |r| near 0.2, so prune below that
    const auto pruned = prune(g, 0.1);
    CHECK(pruned.threshold == 0.1);
    CHECK(pruned.links.size() < g.links.size());
    for (const auto& l : pruned.links) CHECK(std::abs(l.strength) >= 0.1);
    CHECK(find_link(pruned, {0, 1}, {2, 3}, 3) != nullptr);
    CHECK_THROWS_AS(prune(g, -1.0), ConfigError);
}

TEST_CASE("configuration and data errors") {
    DiscoveryConfig bad;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.tau_max = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    Rng rng(6);
    const auto f = segmented(random_trace(rng, 30, 2, 2, "tiny"), 10, 10);
    DiscoveryConfig cfg;
    cfg.tau_max = 10;
    CHECK_THROWS_AS(discover_class_graph(f.pointers(), "tiny", cfg), DataError);
    cfg.tau_max = 2;
    cfg.min_samples = 1000;
    CHECK_THROWS_AS(discover_class_graph(f.pointers(), "tiny", cfg), DataError);
    CHECK_THROWS_AS(discover_class_graph({}, "none", DiscoveryConfig{}), DataError);
}
