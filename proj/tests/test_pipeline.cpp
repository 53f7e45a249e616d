#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "charl/parallel.hpp"
#include "charl/pipeline.hpp"
#include "support.hpp"

using namespace charl;

namespace {

const std::vector<CategoricalTrace>& planted() {
    static const auto traces = synthesize(default_planted_model(), 4000, 2024);
    return traces;
}

}  // namespace

TEST_CASE("config JSON is strict") {
    const PipelineConfig defaults;
    CHECK(config_from_json(nlohmann::json::object()) == defaults);
    CHECK(config_from_json(to_json(defaults)) == defaults);

    const auto c = config_from_json({{"segment_length", 60}, {"alpha", 0.01}, {"seed", 9}});
    CHECK(c.segment_length == 60);
    CHECK(c.alpha == 0.01);
    CHECK(c.seed == 9);
    CHECK(c.hop == defaults.hop);

    CHECK_THROWS_WITH_AS(config_from_json({{"segment_lenght", 60}}), doctest::Contains("segment_lenght"), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"hop", -1}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"hop", 2.5}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"alpha", "0.05"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"segment_length", 5}}), ConfigError);  // not above tau_max
    CHECK_THROWS_AS(config_from_json({{"core_fraction", 0.0}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"train_fraction", 1.0}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("grids") {
    const auto grid = default_grid();
    CHECK(grid.size() == 54);
    CHECK(std::all_of(grid.begin(), grid.end(), [](const auto& c) { return c.classifier_stride == 75; }));
    const auto small = expand_grid({}, {{"rule_budget", {5, 10}}, {"hop", {10}}});
    REQUIRE(small.size() == 2);
    CHECK(small[0].rule_budget == 5);
    CHECK(small[1].rule_budget == 10);
    CHECK_THROWS_AS(expand_grid({}, {{"rule_budget", nlohmann::json::array()}}), ConfigError);
    CHECK_THROWS_AS(expand_grid({}, {{"nonsense", {1}}}), ConfigError);
}

TEST_CASE("end to end on planted data") {
    const auto result = run_pipeline(planted(), PipelineConfig{});
    CHECK(result.report.accuracy >= 0.95);
    CHECK(result.rulebase.activities.size() == 4);
    CHECK(result.graphs.size() == 4);
    for (std::size_t a = 0; a < 4; ++a) {
        CHECK(result.filtered_graphs[a].links.size() <= result.graphs[a].links.size());
        for (const auto& l : result.filtered_graphs[a].links) CHECK(std::abs(l.strength) >= 0.1);
    }
    CHECK_FALSE(result.rulebase.fingerprint.empty());
}

TEST_CASE("reruns are byte-identical across thread counts") {
    set_thread_count(1);
    const auto a = run_pipeline(planted(), PipelineConfig{});
    set_thread_count(7);
    const auto b = run_pipeline(planted(), PipelineConfig{});
    CHECK(to_json(a.rulebase).dump() == to_json(b.rulebase).dump());
    CHECK(to_json(a.report).dump() == to_json(b.report).dump());
}

TEST_CASE("graph cache is shared across rule-level parameters") {
    GraphCache cache;
    PipelineConfig small;
    small.rule_budget = 5;
    PipelineConfig large;
    large.rule_budget = 15;
    large.prune_threshold = 0.05;
    const auto a = run_pipeline(planted(), small, &cache);
    const auto b = run_pipeline(planted(), large, &cache);
    CHECK(cache.discovery_calls() == 1);
    CHECK(cache.size() == 1);

    const auto fresh = run_pipeline(planted(), small);
    CHECK(to_json(a.rulebase) == to_json(fresh.rulebase));
    CHECK(a.rulebase.total_rules() <= 5 * 4);

    PipelineConfig other_segments;
    other_segments.hop = 25;
    run_pipeline(planted(), other_segments, &cache);
    CHECK(cache.discovery_calls() == 2);
}

TEST_CASE("training stages never read test segments") {
    auto train_probe = std::make_shared<AccessProbe>();
    auto test_probe = std::make_shared<AccessProbe>();
    std::uint64_t test_reads_before_evaluation = 999;
    std::vector<std::string> stages;
    PipelineHooks hooks;
    hooks.on_segmented = [&](LabeledDataset& train, LabeledDataset& test) {
        for (auto& s : train.segments) s = s.with_probe(train_probe);
        for (auto& s : test.segments) s = s.with_probe(test_probe);
    };
    hooks.on_stage = [&](std::string_view stage) {
        stages.emplace_back(stage);
        if (stage == "evaluate") test_reads_before_evaluation = test_probe->reads.load();
    };
    const auto result = run_pipeline(planted(), PipelineConfig{}, nullptr, hooks);
    CHECK(stages == std::vector<std::string>{"split", "segment", "discover", "extract", "evaluate"});
    CHECK(test_reads_before_evaluation == 0);
    CHECK(train_probe->reads > 0);
    CHECK(test_probe->reads >= static_cast<std::uint64_t>(result.report.segment_count));
}

TEST_CASE("stage failures are tagged") {
    PipelineConfig too_long;
    too_long.segment_length = 3000;
    try {
        run_pipeline(planted(), too_long);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "split");
        CHECK(std::string(e.what()).rfind("split: ", 0) == 0);
    }
    CHECK_THROWS_AS(run_pipeline({}, PipelineConfig{}), DataError);
}

TEST_CASE("search") {
    GraphCache cache;
    PipelineConfig base;
    const auto grid = expand_grid(base, {{"rule_budget", {2, 15}}, {"prune_threshold", {0.0, 0.1}}});
    const auto result = search(planted(), grid, &cache);
    CHECK(cache.discovery_calls() == 1);
    REQUIRE(result.table.size() == 4);
    double best = 0.0;
    for (const auto& row : result.table) best = std::max(best, row.accuracy.value_or(0.0));
    CHECK(result.best.report.accuracy == best);
    for (const auto& row : result.table)
        if (row.accuracy == best) CHECK_FALSE(config_less(row.config, result.best_config()));
    CHECK(result.graph_fingerprints.size() == 4);

    SUBCASE("a grid of one equals a single run") {
        const auto one = search(planted(), {base});
        const auto single = run_pipeline(planted(), base);
        CHECK(to_json(one.best.rulebase) == to_json(single.rulebase));
        CHECK(one.best.report.accuracy == single.report.accuracy);
    }
    SUBCASE("enlarging the grid never lowers the best accuracy") {
        auto bigger = grid;
        PipelineConfig extra = base;
        extra.rule_budget = 1;
        bigger.push_back(extra);
        CHECK(search(planted(), bigger, &cache).best.report.accuracy >= result.best.report.accuracy);
    }
    SUBCASE("failing configurations are recorded") {
        auto broken = grid;
        PipelineConfig huge = base;
        huge.segment_length = 3000;
        broken.push_back(huge);
        const auto r = search(planted(), broken, &cache);
        CHECK_FALSE(r.table.back().error.empty());
        CHECK_FALSE(r.table.back().eligible);
        CHECK(r.best.report.accuracy == result.best.report.accuracy);
        CHECK_THROWS_AS(search(planted(), {huge}), DataError);
    }
    SUBCASE("minimal support excludes empty rule bases") {
        PipelineConfig none = base;
        none.rule_budget = 0;
        none.min_total_rules = 1;
        CHECK_THROWS_AS(search(planted(), {none}), DataError);
    }
    CHECK(to_json(result)["table"].size() == 4);
    CHECK_THROWS_AS(search(planted(), {}), ConfigError);
}
