#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "prescriptive/anchors.hpp"
#include "prescriptive/errors.hpp"

using namespace prescriptive;

TEST_CASE("wilson interval brackets the point estimate") {
    const auto [lo, hi] = wilson_interval(95, 100, 2.576);
    CHECK(lo < 0.95);
    CHECK(hi > 0.95);
    CHECK(hi <= 1.0);
    const auto [lo1, hi1] = wilson_interval(1000, 1000, 2.576);
    CHECK(hi1 == 1.0);
    CHECK(lo1 > 0.99);
    CHECK_THROWS_AS(wilson_interval(0, 0, 1.0), ExplainError);
}

TEST_CASE("empty rule covers everything; coverage is monotone in rule length") {
    const auto data = oracles::anchor_toy_data();
    CHECK(rule_coverage({}, data.rows) == 1.0);
    const Predicate p0{0, "a", PredicateOp::le, 1.0};
    const Predicate p1{1, "b", PredicateOp::gt, 0.0};
    const Predicate p2{2, "c", PredicateOp::eq, 2.0};
    const double c1 = rule_coverage({p0}, data.rows);
    const double c2 = rule_coverage({p0, p1}, data.rows);
    const double c3 = rule_coverage({p0, p1, p2}, data.rows);
    CHECK(c1 == doctest::Approx(2.0 / 3.0));
    CHECK(c2 <= c1);
    CHECK(c3 <= c2);
    CHECK(c3 == doctest::Approx(2.0 / 3.0 * 2.0 / 3.0 / 3.0));
}

TEST_CASE("constant model is anchored by the empty rule") {
    const auto data = oracles::anchor_toy_data();
    const ClassFn always = [](std::span<const double>) { return 1; };
    const auto r = find_anchor(always, data.rows.row(5), data, AnchorConfig{}, 1);
    CHECK(r.anchored);
    CHECK(r.predicates.empty());
    CHECK(r.coverage == 1.0);
    CHECK(r.precision == 1.0);
}

TEST_CASE("a single-feature stump is anchored by that feature") {
    const auto data = oracles::anchor_toy_data();
    const ClassFn stump = [](std::span<const double> z) { return z[1] > 1.0 ? 1 : 0; };
    std::vector<double> row{0, 2, 1, 0};
    const auto r = find_anchor(stump, row, data, AnchorConfig{}, 3);
    REQUIRE(r.anchored);
    REQUIRE(r.predicates.size() == 1);
    CHECK(r.predicates[0].name == "b");
    CHECK(r.predicates[0].op == PredicateOp::gt);
    CHECK(r.holds(row));
    CHECK(r.precision == 1.0);
    CHECK(render_rule(r) == "b > 1\n");
}

TEST_CASE("accepted anchors are sound against exact enumeration") {
    const auto data = oracles::anchor_toy_data();
    const ClassFn model = oracles::anchor_toy_model;
    AnchorConfig cfg;
    int anchored = 0;
    for (std::size_t i = 0; i < 81; i += 4) {
        const auto row = data.rows.row(i);
        const auto r = find_anchor(model, row, data, cfg, 100 + i);
        CHECK(r.holds(row));
        CHECK(r.predicted_class == model(row));
        if (!r.anchored) continue;
        ++anchored;
        const auto exact = oracles::exact_precision(r.predicates, r.predicted_class, model, data);
        REQUIRE(exact.has_value());
        CHECK(*exact >= cfg.tau);
        CHECK(r.precision_lower >= cfg.tau);
    }
    CHECK(anchored > 10);
}

TEST_CASE("anchor search is reproducible for a fixed seed") {
    const auto data = oracles::anchor_toy_data();
    const ClassFn model = oracles::anchor_toy_model;
    const auto row = data.rows.row(40);
    const auto a = find_anchor(model, row, data, AnchorConfig{}, 8);
    const auto b = find_anchor(model, row, data, AnchorConfig{}, 8);
    CHECK(a.key() == b.key());
    CHECK(a.precision == b.precision);
}

TEST_CASE("precision estimate agrees with enumeration and empty marginals are rejected") {
    const auto data = oracles::anchor_toy_data();
    const ClassFn model = oracles::anchor_toy_model;
    const std::vector<Predicate> rule{{0, "a", PredicateOp::gt, 0.0}};
    const auto est = estimate_precision_coverage(rule, 1, model, data, 20000, 4);
    const auto exact = oracles::exact_precision(rule, 1, model, data);
    REQUIRE(exact.has_value());
    CHECK(std::abs(est.precision - *exact) < 0.02);
    CHECK(est.lower <= *exact);
    CHECK(est.upper >= *exact);
    const std::vector<Predicate> impossible{{0, "a", PredicateOp::gt, 5.0}};
    CHECK_THROWS_AS(estimate_precision_coverage(impossible, 1, model, data, 10, 4), ExplainError);
}

TEST_CASE("candidate predicates use quartiles and the row value") {
    const auto data = oracles::anchor_toy_data();
    std::vector<double> row{2, 0, 1, 1};
    const auto cands = candidate_predicates(row, data);
    for (const auto& p : cands) {
        CHECK(p.holds(row));
        if (data.kinds[p.feature] == FeatureKind::categorical) CHECK(p.op == PredicateOp::eq);
    }
    AnchorConfig bad;
    bad.tau = 0.4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
