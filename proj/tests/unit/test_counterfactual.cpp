#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "student_b.hpp"

#include "prescriptive/counterfactual.hpp"
#include "prescriptive/errors.hpp"

using namespace prescriptive;

namespace {

CfFeature z_feature(const std::string& name) {
    CfFeature f;
    f.name = name;
    f.lo = -kZGridBound;
    f.hi = kZGridBound;
    f.step = kZGridStep;
    return f;
}

}  // namespace

TEST_CASE("grid covers the z band in quarter steps") {
    const auto g = z_feature("z").grid();
    CHECK(g.size() == 25);
    CHECK(g.front() == -3.0);
    CHECK(g.back() == 3.0);
    CHECK(g[13] == 0.25);
    CfFeature cat;
    cat.kind = FeatureKind::categorical;
    cat.n_categories = 4;
    cat.missing_category = 3;
    CHECK(cat.grid() == std::vector<double>{0, 1, 2});
}

TEST_CASE("monotone single-feature model: the smallest passing step is found") {
    const std::vector<CfFeature> space{z_feature("z")};
    const MarginFn model = [](std::span<const double> x) { return 4.0 * (x[0] - 0.2); };
    CfConstraints c;
    c.actionable = {"z"};
    c.monotone["z"] = Monotone::increase_only;
    std::vector<double> row{-1.0};
    const auto cfs = generate_counterfactuals(model, row, 1, c, space, CfWeights{}, GaConfig{}, 3);
    REQUIRE(cfs.size() == 1);
    CHECK(cfs[0].row[0] == 0.25);
    CHECK(cfs[0].scores.validity);
    CHECK(cfs[0].scores.sparsity == 1);
    CHECK(cfs[0].prob_after == doctest::Approx(1.0 / (1.0 + std::exp(-0.2))));
}

TEST_CASE("score components and weighted total") {
    std::vector<CfFeature> space{z_feature("a"), z_feature("b")};
    CfFeature cat;
    cat.name = "c";
    cat.kind = FeatureKind::categorical;
    cat.n_categories = 3;
    cat.hi = 2;
    space.push_back(cat);
    const MarginFn model = [](std::span<const double> x) { return x[0] + x[1] - 1.0 + (x[2] == 2 ? 0.5 : 0.0); };
    CfConstraints c;
    c.actionable = {"a", "b", "c"};
    const CfWeights w;
    std::vector<double> row{0, 0, 0};
    std::vector<double> cand{0.5, 0, 2};
    const auto s = score_candidate(model, row, cand, c, space, w, {{0, 0, 1}});
    CHECK(s.validity);  // margin exactly 0, p = 0.5
    CHECK(s.hinge == 0.0);
    CHECK(s.proximity == doctest::Approx(0.5 / 6 + 1));
    CHECK(s.sparsity == 2);
    CHECK(s.diversity == doctest::Approx(0.5 / 6 + 1));
    CHECK(s.total == doctest::Approx(w.validity * 0 + w.proximity * s.proximity + w.sparsity * 2 -
                                     w.diversity * s.diversity));
    std::vector<double> short_cand{0.25, 0, 0};
    const auto s2 = score_candidate(model, row, short_cand, c, space, w);
    CHECK(s2.hinge == doctest::Approx(0.75));
    CHECK(s2.diversity == 0.0);
    c.frozen = {"b"};
    c.actionable = {"a", "c"};
    std::vector<double> touches_frozen{0, 1, 0};
    CHECK_THROWS_AS(score_candidate(model, row, touches_frozen, c, space, w), ConstraintViolation);
}

TEST_CASE("filter_feasible drops pathways that break a constraint") {
    CfConstraints c;
    c.actionable = {"a", "b"};
    c.frozen = {"f"};
    c.max_changed = 1;
    c.ranges["a"] = {-1.0, 1.0};
    c.monotone["b"] = Monotone::increase_only;
    auto make = [](std::vector<CfDelta> d) {
        Counterfactual cf;
        cf.deltas = std::move(d);
        return cf;
    };
    const std::vector<Counterfactual> cfs{
        make({{0, "a", 0, 0.5}}),                     // ok
        make({{0, "a", 0, 1.5}}),                     // outside range
        make({{1, "b", 0, -0.5}}),                    // wrong direction
        make({{2, "f", 0, 1}}),                       // frozen
        make({{3, "g", 0, 1}}),                       // not actionable
        make({{0, "a", 0, 0.5}, {1, "b", 0, 0.5}}),  // too many changes
    };
    const auto kept = filter_feasible(cfs, c);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].deltas[0].to == 0.5);
}

TEST_CASE("GA matches exhaustive search on three-binary-feature models") {
    const auto space = oracles::binary_space();
    const auto c = oracles::binary_constraints();
    const CfWeights w;
    int matches = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto b = oracles::binary_case(seed);
        const MarginFn f = [&b](std::span<const double> x) { return b.margin(x); };
        const auto cfs = generate_counterfactuals(f, b.row, 1, c, space, w, GaConfig{}, seed);
        REQUIRE(!cfs.empty());
        const auto& s = cfs[0].scores;
        const double loss = w.validity * s.hinge + w.proximity * s.proximity + w.sparsity * double(s.sparsity);
        if (std::abs(loss - oracles::binary_best_loss(b, w)) < 1e-12) ++matches;
    }
    CHECK(matches == 30);
}

TEST_CASE("frozen features never change and sparsity respects max_changed") {
    const auto m = student_b::model();
    const MarginFn f = [&m](std::span<const double> x) { return m.margin_features(x); };
    const auto space = cf_space(default_schema(), student_b::names());
    auto c = default_constraints(default_schema(), student_b::names());
    c.actionable.erase("qualification_percent_completed");
    c.frozen.insert("qualification_percent_completed");
    c.max_changed = 2;
    const auto cfs = generate_counterfactuals(f, student_b::row(), 3, c, space, CfWeights{}, GaConfig{}, 4);
    REQUIRE(!cfs.empty());
    for (const auto& cf : cfs) {
        CHECK(cf.scores.validity);
        CHECK(cf.deltas.size() <= 2);
        CHECK(cf.row[0] == student_b::row()[0]);
        CHECK(sigmoid(f(cf.row)) >= 0.5);
    }
    CHECK(filter_feasible(cfs, c).size() == cfs.size());
}

TEST_CASE("seeded search is deterministic and pathways are distinct") {
    const auto m = student_b::model();
    const MarginFn f = [&m](std::span<const double> x) { return m.margin_features(x); };
    const auto space = cf_space(default_schema(), student_b::names());
    const auto c = default_constraints(default_schema(), student_b::names());
    const auto a = generate_counterfactuals(f, student_b::row(), 3, c, space, CfWeights{}, GaConfig{}, 9);
    const auto b = generate_counterfactuals(f, student_b::row(), 3, c, space, CfWeights{}, GaConfig{}, 9);
    CHECK(a == b);
    REQUIRE(a.size() == 3);
    std::set<std::vector<double>> rows;
    for (const auto& cf : a) rows.insert(cf.row);
    CHECK(rows.size() == 3);
    CHECK(counterfactual_from_json(counterfactual_to_json(a[0])) == a[0]);
}

TEST_CASE("student B: the best pathway raises qualification completion by one grid step") {
    const auto m = student_b::model();
    const MarginFn f = [&m](std::span<const double> x) { return m.margin_features(x); };
    CHECK(f(student_b::row()) == doctest::Approx(-2.15));
    const auto space = cf_space(default_schema(), student_b::names());
    const auto c = default_constraints(default_schema(), student_b::names());
    CHECK(c.actionable.size() == 5);
    const auto cfs = generate_counterfactuals(f, student_b::row(), 3, c, space, CfWeights{}, GaConfig{}, 42);
    REQUIRE(!cfs.empty());
    REQUIRE(cfs[0].deltas.size() == 1);
    CHECK(cfs[0].deltas[0].name == "qualification_percent_completed");
    CHECK(cfs[0].deltas[0].to == -0.75);
    CHECK(cfs[0].row[3] == student_b::row()[3]);  // mean grade unchanged

    const auto table = cf_table(student_b::row(), cfs, space);
    CHECK(table.columns[0] == "feature");
    CHECK(table.columns[2] == "PF1");
    // One row per feature that some pathway changes; "-" where a pathway leaves it alone.
    std::set<std::size_t> touched;
    for (const auto& cf : cfs)
        for (const auto& d : cf.deltas) touched.insert(d.feature);
    REQUIRE(table.rows.size() == touched.size());
    CHECK(table.rows[0][0] == "qualification_percent_completed");
    CHECK(table.rows[0][2] == "-0.75");
    for (std::size_t r = 1; r < table.rows.size(); ++r) CHECK(table.rows[r][2] == "-");
}

TEST_CASE("no actionable feature or an already-completing row are reported") {
    const auto m = student_b::model();
    const MarginFn f = [&m](std::span<const double> x) { return m.margin_features(x); };
    const auto space = cf_space(default_schema(), student_b::names());
    CfConstraints frozen_all;
    for (const auto& n : student_b::names()) frozen_all.frozen.insert(n);
    try {
        generate_counterfactuals(f, student_b::row(), 3, frozen_all, space, CfWeights{}, GaConfig{}, 1);
        FAIL("expected NoFeasiblePathway");
    } catch (const NoFeasiblePathway& e) {
        CHECK_FALSE(e.best_invalid.has_value());
    }
    // Only mean grade may move, and that stump alone cannot reach the threshold.
    CfConstraints grade_only;
    grade_only.actionable = {"grade_mark_mean"};
    try {
        generate_counterfactuals(f, student_b::row(), 3, grade_only, space, CfWeights{}, GaConfig{}, 1);
        FAIL("expected NoFeasiblePathway");
    } catch (const NoFeasiblePathway& e) {
        REQUIRE(e.best_invalid.has_value());
        CHECK_FALSE(e.best_invalid->scores.validity);
    }
    auto good = student_b::row();
    good[0] = 2.0;
    good[1] = 1.0;
    CHECK_THROWS_AS(generate_counterfactuals(f, good, 1, default_constraints(default_schema(), student_b::names()),
                                             space, CfWeights{}, GaConfig{}, 1),
                    ExplainError);
    CfConstraints bad;
    bad.actionable = {"qualification_percent_completed"};
    bad.frozen = {"qualification_percent_completed"};
    CHECK_THROWS_AS(bad.validate(space), ConfigError);
    CHECK(CfConstraints::from_json(default_constraints(default_schema(), student_b::names()).to_json()).actionable ==
          default_constraints(default_schema(), student_b::names()).actionable);
}
