#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/shap.hpp"

using namespace prescriptive;

namespace {

std::vector<std::string> names_for(std::size_t m) {
    std::vector<std::string> n;
    for (std::size_t j = 0; j < m; ++j) n.push_back("f" + std::to_string(j));
    return n;
}

// Shapley values as the mean marginal contribution over every permutation.
std::vector<double> permutation_oracle(const MarginFn& f, const std::vector<double>& x, const Matrix& bg) {
    const std::size_t m = x.size();
    auto value = [&](const std::vector<bool>& in) {
        double s = 0;
        for (std::size_t b = 0; b < bg.rows; ++b) {
            std::vector<double> z(m);
            for (std::size_t j = 0; j < m; ++j) z[j] = in[j] ? x[j] : bg(b, j);
            s += f(z);
        }
        return s / static_cast<double>(bg.rows);
    };
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> phi(m, 0.0);
    double count = 0;
    do {
        std::vector<bool> in(m, false);
        double prev = value(in);
        for (auto j : perm) {
            in[j] = true;
            const double cur = value(in);
            phi[j] += cur - prev;
            prev = cur;
        }
        count += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (auto& p : phi) p /= count;
    return phi;
}

// Nonlinear test function with interactions and a threshold.
double wiggly(std::span<const double> z) {
    double s = 0.5 * z[0] - z[1] * z[2] + (z[3] > 0.3 ? 1.2 : -0.4);
    if (z.size() > 4) s += std::sin(z[4]) * z[0];
    if (z.size() > 5) s += 0.7 * z[5] * z[5];
    return s;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(-1, 1);
    return m;
}

}  // namespace

TEST_CASE("exact_shap matches the permutation oracle and is locally accurate") {
    const MarginFn f = wiggly;
    const auto bg = random_matrix(7, 6, 1);
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> x(6);
        for (auto& v : x) v = rng.uniform(-1, 1);
        const auto a = exact_shap(f, x, bg, names_for(6));
        const auto oracle = permutation_oracle(f, x, bg);
        for (std::size_t j = 0; j < 6; ++j) CHECK(a.phi[j] == doctest::Approx(oracle[j]).epsilon(1e-10));
        CHECK(std::abs(a.residual()) < 1e-10);
        CHECK(a.model_output == doctest::Approx(f(x)));
    }
}

TEST_CASE("kernel_shap with full enumeration equals exact Shapley values") {
    const MarginFn f = wiggly;
    const auto bg = random_matrix(5, 6, 3);
    std::vector<double> x{0.2, -0.7, 0.9, 0.5, 1.0, -0.3};
    const auto exact = exact_shap(f, x, bg, names_for(6));
    const auto kern = kernel_shap(f, x, bg, names_for(6), 64, 9);
    for (std::size_t j = 0; j < 6; ++j) CHECK(kern.phi[j] == doctest::Approx(exact.phi[j]).epsilon(1e-9));
    CHECK(std::abs(kern.residual()) < 1e-9);
}

TEST_CASE("sampled kernel_shap stays efficient and approaches exact values as samples grow") {
    const MarginFn f = wiggly;
    const auto bg = random_matrix(5, 6, 4);
    std::vector<double> x{0.9, 0.8, -0.9, 0.7, -1.0, 0.6};
    const auto exact = exact_shap(f, x, bg, names_for(6));
    auto err = [&](std::size_t n) {
        const auto k = kernel_shap(f, x, bg, names_for(6), n, 5);
        CHECK(std::abs(k.residual()) < 1e-9);
        double e = 0;
        for (std::size_t j = 0; j < 6; ++j) e = std::max(e, std::abs(k.phi[j] - exact.phi[j]));
        return e;
    };
    const double coarse = err(14);
    const double fine = err(60);
    CHECK(fine <= coarse + 1e-12);
    CHECK(kernel_shap(f, x, bg, names_for(6), 30, 5).phi == kernel_shap(f, x, bg, names_for(6), 30, 5).phi);
    CHECK_THROWS_AS(kernel_shap(f, x, bg, names_for(6), 13, 5), ExplainError);
}

TEST_CASE("dummy features get zero and symmetric features get equal attribution") {
    // f depends on x0 and x1 symmetrically; x2 is ignored.
    const MarginFn f = [](std::span<const double> z) {
        return (z[0] > 0.5 ? 1.0 : 0.0) + (z[1] > 0.5 ? 1.0 : 0.0) + 3.0 * (z[0] > 0.5 && z[1] > 0.5);
    };
    Matrix bg(4, 3);
    const double rows[4][3] = {{0, 1, 0.3}, {1, 0, 0.9}, {0, 0, 0.1}, {1, 1, 0.5}};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) bg(i, j) = rows[i][j];
    std::vector<double> x{1, 1, 7};
    for (const auto& a : {exact_shap(f, x, bg, names_for(3)), kernel_shap(f, x, bg, names_for(3), 8, 1)}) {
        CHECK(std::abs(a.phi[2]) <= 1e-9);
        CHECK(std::abs(a.phi[0] - a.phi[1]) <= 1e-9);
        CHECK(std::abs(a.residual()) <= 1e-9);
    }
}

TEST_CASE("exact_shap refuses more than twelve features") {
    const MarginFn f = [](std::span<const double> z) { return z[0]; };
    Matrix bg(1, 13);
    std::vector<double> x(13, 1.0);
    CHECK_THROWS_AS(exact_shap(f, x, bg, names_for(13)), ExplainError);
    Matrix empty(0, 13);
    CHECK_THROWS_AS(kernel_shap(f, x, empty, names_for(13), 100, 0), ExplainError);
}

TEST_CASE("global importance ordering and stratified background") {
    Attribution a, b;
    a.features = b.features = {"x", "y", "z"};
    a.phi = {0.5, -1.0, 0.0};
    b.phi = {-0.5, 0.0, 0.25};
    const auto imp = global_importance({a, b});
    CHECK(imp[0].feature == "x");
    CHECK(imp[0].mean_abs_phi == 0.5);
    CHECK(imp[1].feature == "y");
    CHECK(imp[2].mean_abs_phi == 0.125);

    Matrix rows(100, 1);
    std::vector<int> labels(100, 0);
    for (std::size_t i = 0; i < 100; ++i) {
        rows(i, 0) = static_cast<double>(i);
        labels[i] = i < 70 ? 1 : 0;
    }
    const auto bg = stratified_background(rows, labels, 20, 3);
    CHECK(bg.rows == 20);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < bg.rows; ++i) pos += bg(i, 0) < 70 ? 1 : 0;
    CHECK(pos == 14);
    CHECK(stratified_background(rows, labels, 20, 3) == bg);
}

TEST_CASE("force plot export orders bars and round-trips") {
    Attribution a;
    a.features = {"x", "y", "z"};
    a.phi = {0.1, -0.6, 0.0};
    a.feature_values = {1, 2, 3};
    a.base_value = 0.2;
    a.model_output = -0.3;
    const auto plot = force_plot_export(a, {"one", "two", "three"});
    REQUIRE(plot.bars.size() == 3);
    CHECK(plot.bars[0].feature == "y");
    CHECK(plot.bars[0].direction == Direction::toward_non_completion);
    CHECK(plot.bars[1].direction == Direction::toward_completion);
    CHECK(plot.bars[2].direction == Direction::neutral);
    CHECK(plot.bars[0].value_display == "two");
    CHECK(plot.final_value == -0.3);
    CHECK(force_plot_from_json(force_plot_to_json(plot)) == plot);
    CHECK_THROWS_AS(force_plot_export(a, {"only one"}), ShapeError);
    CHECK(a.phi_of("y") == -0.6);
    CHECK_THROWS_AS(a.phi_of("nope"), ExplainError);
}
