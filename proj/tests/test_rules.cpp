#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "charl/rules.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace charl;
using charl::testing::make_trace;

namespace {

LabeledDataset two_class_dataset() {
    std::vector<CategoricalTrace> traces{
        make_trace({{1, 1}, {1, 0}, {0, 1}, {1, 1}, {0, 0}}, 2, "A"),
        make_trace({{1, 1}, {1, 1}, {1, 1}, {0, 0}, {0, 0}}, 2, "B"),
    };
    return build_dataset(traces, 5, 5);
}

TemporalRule rule(const std::string& activity, Proposition src, Proposition dst, int lag, Polarity pol,
                  double omega = 0.5) {
    TemporalRule r;
    r.activity = activity;
    r.src = src;
    r.dst = dst;
    r.lag = lag;
    r.polarity = pol;
    r.omega = omega;
    return r;
}

TemporalRule ranked(int src_cat, double weight, double margin, double omega) {
    auto r = rule("A", {0, src_cat}, {1, 0}, 1, Polarity::positive, omega);
    r.weight = weight;
    r.margin = margin;
    return r;
}

}  // namespace

TEST_CASE("Laplace smoothing") {
    CHECK(laplace_rate(0, 0) == 0.5);
    CHECK(laplace_rate(3, 4) == doctest::Approx(4.0 / 6.0));
    CHECK(laplace_rate(10, 10) < 1.0);
    CHECK(laplace_rate(0, 10) > 0.0);
}

TEST_CASE("weights") {
    CHECK(rule_weight(0.5, 0.2, 3) == doctest::Approx(0.5 * 0.2 * std::log(4.0)));
    CHECK(rule_weight(0.5, -0.2, 3) == 0.0);
    CHECK(rule_weight(0.5, 0.2, 0) == 0.0);
}

TEST_CASE("translation keeps direction, lag and sign") {
    const LaggedLink pos{{0, 3}, {1, 2}, 2, 0.41, 0.001};
    const auto r = translate(pos, "Walk");
    CHECK(r.polarity == Polarity::positive);
    CHECK(r.omega == doctest::Approx(0.41));
    CHECK(r.lag == 2);
    CHECK(r.src == Proposition{0, 3});
    const LaggedLink neg{{0, 3}, {1, 2}, 4, -0.2, 0.01};
    CHECK(translate(neg, "Walk").polarity == Polarity::negative);
    CHECK(ltl::print(translate(neg, "Walk").formula(), ltl::Style::unicode) == "□(z_{0,3} → ○^4 ¬z_{1,2})");
    CHECK_THROWS(translate({{0, 3}, {1, 2}, 2, 0.0, 0.5}, "Walk"));
    CHECK_THROWS(translate({{0, 3}, {1, 2}, 0, 0.3, 0.5}, "Walk"));
}

TEST_CASE("estimation against hand counts") {
    const auto ds = two_class_dataset();
    // A: n = 3, h = 1; B: n = 3, h = 2 for z_{0,1} -> X z_{1,1}
    const auto a = estimate(rule("A", {0, 1}, {1, 1}, 1, Polarity::positive), ds);
    CHECK(a.n == 3);
    CHECK(a.h == 1);
    CHECK(a.p_in == doctest::Approx(0.4));
    CHECK(a.p_out == doctest::Approx(0.6));
    CHECK(a.margin == doctest::Approx(-0.2));
    CHECK(a.weight == 0.0);

    const auto b = estimate(rule("B", {0, 1}, {1, 1}, 1, Polarity::positive), ds);
    CHECK(b.margin == doctest::Approx(0.2));
    CHECK(b.weight == doctest::Approx(0.5 * 0.2 * std::log(4.0)));

    const auto neg = estimate(rule("A", {0, 1}, {1, 1}, 1, Polarity::negative), ds);
    CHECK(neg.h == 2);
    CHECK(neg.p_in == doctest::Approx(0.6));
    CHECK(neg.p_out == doctest::Approx(0.4));
}

TEST_CASE("count tables agree with direct counting") {
    Rng rng(12);
    std::vector<CategoricalTrace> traces;
    for (const char* name : {"x", "y", "z"}) traces.push_back(charl::testing::random_trace(rng, 300, 3, 3, name));
    const auto ds = build_dataset(traces, 40, 15);
    const CountTable table(ds, 4);
    for (int i = 0; i < 300; ++i) {
        const auto r = rule(ds.activities[rng.next() % 3],
                            {static_cast<int>(rng.next() % 3), static_cast<int>(rng.next() % 3)},
                            {static_cast<int>(rng.next() % 3), static_cast<int>(rng.next() % 3)},
                            1 + static_cast<int>(rng.next() % 4),
                            rng.next() % 2 ? Polarity::positive : Polarity::negative);
        const auto slow = estimate(r, ds);
        const auto fast = estimate(r, table);
        REQUIRE(slow.n == fast.n);
        REQUIRE(slow.h == fast.h);
        REQUIRE(slow.p_out == fast.p_out);
        REQUIRE(slow.weight == fast.weight);
    }
    CHECK_THROWS(table.in_class(0, {{0, 0}, {0, 0}, 5, Polarity::positive}));
    CHECK_THROWS(estimate(rule("w", {0, 0}, {0, 1}, 1, Polarity::positive), table));
}

TEST_CASE("selection") {
    std::vector<TemporalRule> pool{ranked(0, 0.3, 0.2, 0.5), ranked(1, 0.9, 0.3, 0.5), ranked(2, 0.0, -0.1, 0.5),
                                   ranked(3, 0.3, 0.4, 0.5)};
    const auto picked = select(pool, 10);
    REQUIRE(picked.size() == 3);  // the negative-margin rule is dropped
    CHECK(picked[0].src.category == 1);
    CHECK(picked[1].src.category == 3);  // equal weight, larger margin first
    CHECK(picked[2].src.category == 0);

    CHECK(select(pool, 2).size() == 2);
    CHECK(select(pool, 0).empty());

    auto shuffled = pool;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto again = select(shuffled, 10);
    for (std::size_t i = 0; i < picked.size(); ++i) CHECK(again[i].shape() == picked[i].shape());

    // duplicates collapse to the best copy
    auto dup = pool;
    dup.push_back(ranked(1, 0.1, 0.3, 0.2));
    const auto collapsed = select(dup, 10);
    CHECK(collapsed.size() == 3);
    CHECK(collapsed[0].weight == 0.9);

    // full ties fall back to proposition order
    const auto tie = select({ranked(2, 0.5, 0.1, 0.2), ranked(1, 0.5, 0.1, 0.2)}, 10);
    CHECK(tie[0].src.category == 1);
}

TEST_CASE("rule bases round-trip through JSON") {
    RuleBase rb;
    rb.num_variables = 2;
    rb.num_categories = 2;
    rb.activities = {"A", "B"};
    auto r = estimate(rule("A", {0, 1}, {1, 1}, 1, Polarity::negative), two_class_dataset());
    rb.rules = {{r}, {}};
    rb.prototypes = {std::nullopt, std::vector<double>{0.5, 0.5, 0.25, 0.75}};
    rb.fingerprint = "abc";
    const auto back = rulebase_from_json(to_json(rb));
    CHECK(to_json(back) == to_json(rb));
    CHECK(back.rules[0][0].shape() == r.shape());
    CHECK(back.total_rules() == 1);

    auto missing = rb;
    missing.prototypes[1].reset();
    CHECK_THROWS_AS(missing.validate(), DataError);
    auto wrong = rb;
    wrong.rules[0][0].src.variable = 5;
    CHECK_THROWS_AS(wrong.validate(), DataError);
    CHECK_THROWS_AS(rulebase_from_json(nlohmann::json{{"num_variables", 2}}), DataError);

    std::ostringstream out;
    write_rule_listing(out, rb);
    std::istringstream in(out.str());
    const auto sections = ltl::read_listing(in);
    REQUIRE(sections.size() == 2);
    CHECK(sections[0].rules[0] == r.formula());
    CHECK(sections[1].rules.empty());
}

TEST_CASE("digest is stable") {
    CHECK(digest("") == "cbf29ce484222325");
    CHECK(digest("a") == "af63dc4c8601ec8c");
    CHECK(digest("abc") != digest("abd"));
}
