#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"

#include "prescriptive/errors.hpp"
#include "prescriptive/gbm.hpp"
#include "prescriptive/metrics.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/synth.hpp"
#include "prescriptive/tuning.hpp"

using namespace prescriptive;

namespace {

// Two informative columns and one noise column; label = x0 + x1 > 1 with 5% flips.
void toy(std::size_t n, std::uint64_t seed, Matrix& X, std::vector<int>& y) {
    Rng rng(seed);
    X = Matrix(n, 3);
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform();
        X(i, 1) = rng.uniform();
        X(i, 2) = rng.uniform();
        y[i] = X(i, 0) + X(i, 1) > 1.0 ? 1 : 0;
        if (rng.bernoulli(0.05)) y[i] = 1 - y[i];
    }
}

// O(n^2) pair count, ties worth one half.
double auc_by_pairs(const std::vector<int>& y, const std::vector<double>& s) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

}  // namespace

TEST_CASE("gbm learns a separable toy and round-trips through text") {
    Matrix X;
    std::vector<int> y;
    toy(600, 1, X, y);
    Hyperparams hp;
    hp.n_estimators = 60;
    hp.max_depth = 3;
    hp.subsample = 0.8;
    const auto m = train_gbm(X, y, hp, 7);
    CHECK(m.trees.size() == 60);
    for (const auto& t : m.trees) CHECK(t.depth() <= 3);
    const auto metrics = evaluate(m, X, y);
    CHECK(metrics.accuracy.mean > 90.0);
    CHECK(metrics.auc.mean > 90.0);

    const auto back = model_from_text(model_to_text(m));
    CHECK(back == m);
    for (std::size_t i = 0; i < 20; ++i) CHECK(back.margin(X.row(i)) == m.margin(X.row(i)));

    CHECK(train_gbm(X, y, hp, 7) == m);
    CHECK_FALSE(train_gbm(X, y, hp, 8) == m);
    CHECK_THROWS_AS(m.margin(std::vector<double>{1.0}), ShapeError);
    CHECK_THROWS(model_from_text("not a model"));
}

TEST_CASE("gbm refuses single-class data and bad hyperparameters") {
    Matrix X(5, 1, 1.0);
    std::vector<int> y(5, 1);
    CHECK_THROWS_AS(train_gbm(X, y, Hyperparams{}, 0), FitError);
    Hyperparams hp;
    hp.max_depth = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = Hyperparams{};
    hp.subsample = 1.5;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    CHECK(Hyperparams::from_json(Hyperparams{}.to_json()) == Hyperparams{});
}

TEST_CASE("sigmoid and logit are inverses") {
    for (double p : {0.01, 0.3, 0.5, 0.9}) CHECK(sigmoid(logit(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK(logit(0.5) == 0.0);
}

TEST_CASE("roc_auc agrees with the pair-count oracle, including ties") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> y(80);
        std::vector<double> s(80);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = rng.bernoulli(0.6) ? 1 : 0;
            s[i] = std::round(rng.uniform() * 10) / 10;  // many ties
        }
        y[0] = 0;
        y[1] = 1;
        CHECK(roc_auc(y, s) == doctest::Approx(auc_by_pairs(y, s)).epsilon(1e-12));
    }
    std::vector<int> one{1, 1};
    std::vector<double> sc{0.1, 0.2};
    CHECK_THROWS_AS(roc_auc(one, sc), MetricError);
}

TEST_CASE("fold scores and the majority baseline's closed form") {
    std::vector<int> y{1, 1, 1, 0};
    std::vector<int> pred{1, 0, 1, 1};
    std::vector<double> s{0.9, 0.2, 0.8, 0.7};
    const auto f = score_fold(y, pred, s);
    CHECK(f.precision == doctest::Approx(200.0 / 3));
    CHECK(f.recall == doctest::Approx(200.0 / 3));
    CHECK(f.accuracy == doctest::Approx(50.0));
    CHECK(f.f1 == doctest::Approx(200.0 / 3));
    CHECK(f1_from(0, 0) == 0.0);

    std::vector<int> labels(1000, 0);
    for (std::size_t i = 0; i < 719; ++i) labels[i] = 1;
    const auto mode = train_baseline(BaselineKind::mode, labels, 0);
    CHECK(mode.majority == 1);
    const auto mm = evaluate(mode, labels);
    CHECK(mm.recall.mean == 100.0);
    CHECK(mm.precision.mean == doctest::Approx(71.9));
    CHECK(mm.f1.mean == doctest::Approx(2 * 0.719 / 1.719 * 100).epsilon(1e-12));
    CHECK(mm.auc.mean == doctest::Approx(50.0));

    const auto strat = train_baseline(BaselineKind::stratified, labels, 1);
    const auto pred1 = strat.predict(5000, 0);
    const double frac = std::accumulate(pred1.begin(), pred1.end(), 0.0) / 5000.0;
    CHECK(std::abs(frac - 0.719) < 0.03);
    CHECK(strat.predict(50, 3) == strat.predict(50, 3));
    CHECK_FALSE(strat.predict(50, 3) == strat.predict(50, 4));
}

TEST_CASE("summaries use the population standard deviation") {
    std::vector<FoldScores> folds(2);
    folds[0].f1 = 80;
    folds[1].f1 = 90;
    folds[0].auc = 70;
    const auto m = summarize(folds);
    CHECK(m.f1.mean == 85.0);
    CHECK(m.f1.std == 5.0);
}

TEST_CASE("search space indexing and random search") {
    SearchSpace space;
    space.n_estimators = {10, 20};
    space.max_depth = {1, 2};
    space.learning_rate = {0.3};
    space.subsample = {1.0};
    space.min_samples_leaf = {1};
    space.min_samples_split = {2};
    CHECK(space.size() == 4);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(space.contains(space.at(i)));
        seen.insert(space.at(i).to_string());
    }
    CHECK(seen.size() == 4);
    CHECK_THROWS_AS(space.at(4), ConfigError);
    CHECK(SearchSpace::from_json(space.to_json()).size() == 4);

    auto gen = GeneratorConfig::defaults();
    gen.n_rows = 600;
    const auto data = impute_and_encode(generate_synthetic(gen, 2), gen.schema.predictive_names());
    const auto r = random_search_cv(data, space, 10, 3, 3, 5);
    CHECK(r.trials.size() == 4);  // n_iter beyond the space: every configuration once
    double best = 0;
    for (const auto& t : r.trials) best = std::max(best, t.metrics.f1.mean);
    bool found = false;
    for (const auto& t : r.trials)
        if (t.hyperparams == r.best) found = t.metrics.f1.mean == best;
    CHECK(found);
    CHECK(r.final_metrics.folds.size() == 3);
    const auto r2 = random_search_cv(data, space, 2, 3, 3, 5);
    CHECK(r2.trials.size() == 2);
    CHECK(random_search_cv(data, space, 2, 3, 3, 5).best == r2.best);
}
