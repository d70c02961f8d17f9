#include "prescriptive/shap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

double Attribution::phi_of(std::string_view feature) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i] == feature) return phi[i];
    }
    throw ExplainError("attribution has no feature '" + std::string(feature) + "'");
}

double Attribution::residual() const {
    return base_value + std::accumulate(phi.begin(), phi.end(), 0.0) - model_output;
}

namespace {

void check_inputs(std::span<const double> row, const Matrix& background, const std::vector<std::string>& names) {
    if (background.rows == 0) throw ExplainError("background set is empty");
    if (background.cols != row.size()) throw ShapeError("background width does not match row width");
    if (names.size() != row.size()) throw ShapeError("feature name count does not match row width");
}

// Mean model output with features in `mask` taken from row and the rest from each background row.
class CoalitionValue {
public:
    CoalitionValue(const MarginFn& model, std::span<const double> row, const Matrix& background)
        : model_(model), row_(row.begin(), row.end()), background_(background), scratch_(row.size()) {}

    double operator()(const std::vector<char>& in_coalition) {
        double total = 0.0;
        for (std::size_t b = 0; b < background_.rows; ++b) {
            auto bg = background_.row(b);
            for (std::size_t j = 0; j < row_.size(); ++j) scratch_[j] = in_coalition[j] ? row_[j] : bg[j];
            total += model_(scratch_);
        }
        return total / static_cast<double>(background_.rows);
    }

private:
    const MarginFn& model_;
    std::vector<double> row_;
    const Matrix& background_;
    std::vector<double> scratch_;
};

std::vector<char> mask_bits(std::uint64_t mask, std::size_t m) {
    std::vector<char> bits(m);
    for (std::size_t j = 0; j < m; ++j) bits[j] = static_cast<char>((mask >> j) & 1u);
    return bits;
}

Attribution make_attribution(std::span<const double> row, const std::vector<std::string>& names) {
    Attribution a;
    a.features = names;
    a.feature_values.assign(row.begin(), row.end());
    a.phi.assign(row.size(), 0.0);
    return a;
}

}  // namespace

Attribution exact_shap(const MarginFn& model, std::span<const double> row, const Matrix& background,
                       const std::vector<std::string>& feature_names) {
    check_inputs(row, background, feature_names);
    const std::size_t m = row.size();
    if (m > kExactShapMaxFeatures) {
        throw ExplainError("exact_shap refuses " + std::to_string(m) + " features (limit " +
                           std::to_string(kExactShapMaxFeatures) + "); use kernel_shap");
    }
    const std::uint64_t n_masks = std::uint64_t{1} << m;
    std::vector<double> value(n_masks);
    {
        CoalitionValue v(model, row, background);
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) value[mask] = v(mask_bits(mask, m));
    }
    // weight(s) = s! (m - s - 1)! / m!
    std::vector<double> weight(m);
    for (std::size_t s = 0; s < m; ++s) {
        weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1) + std::lgamma(static_cast<double>(m - s)) -
                             std::lgamma(static_cast<double>(m) + 1));
    }
    Attribution a = make_attribution(row, feature_names);
    for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        double phi = 0.0;
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const auto s = static_cast<std::size_t>(__builtin_popcountll(mask));
            phi += weight[s] * (value[mask | bit] - value[mask]);
        }
        a.phi[i] = phi;
    }
    a.base_value = value[0];
    a.model_output = value[n_masks - 1];
    return a;
}

namespace {

struct WeightedCoalitions {
    std::vector<std::uint64_t> masks;  // used only for m <= 63
    std::vector<std::vector<char>> bits;
    std::vector<double> weights;
};

WeightedCoalitions enumerate_coalitions(std::size_t m) {
    WeightedCoalitions c;
    const std::uint64_t n_masks = std::uint64_t{1} << m;
    for (std::uint64_t mask = 1; mask + 1 < n_masks; ++mask) {
        const auto s = static_cast<double>(__builtin_popcountll(mask));
        const double md = static_cast<double>(m);
        const double log_binom = std::lgamma(md + 1) - std::lgamma(s + 1) - std::lgamma(md - s + 1);
        c.bits.push_back(mask_bits(mask, m));
        c.weights.push_back((md - 1.0) / (std::exp(log_binom) * s * (md - s)));
    }
    return c;
}

WeightedCoalitions sample_coalitions(std::size_t m, std::size_t n_samples, Rng& rng) {
    // Total kernel mass per coalition size s is (m-1) / (s (m-s)).
    std::vector<double> size_mass(m + 1, 0.0);
    for (std::size_t s = 1; s < m; ++s) {
        size_mass[s] = static_cast<double>(m - 1) / (static_cast<double>(s) * static_cast<double>(m - s));
    }
    std::map<std::vector<char>, double> counts;
    std::vector<std::size_t> perm(m);
    const std::size_t pairs = std::max<std::size_t>(1, n_samples / 2);
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t s = rng.categorical(size_mass);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t k = 0; k < s; ++k) std::swap(perm[k], perm[k + rng.below(m - k)]);
        std::vector<char> bits(m, 0);
        for (std::size_t k = 0; k < s; ++k) bits[perm[k]] = 1;
        std::vector<char> complement(m);
        for (std::size_t j = 0; j < m; ++j) complement[j] = static_cast<char>(!bits[j]);
        counts[bits] += 1.0;
        counts[complement] += 1.0;
    }
    WeightedCoalitions c;
    for (auto& [bits, w] : counts) {
        c.bits.push_back(bits);
        c.weights.push_back(w);
    }
    return c;
}

// Returns false when the reduced normal equations are rank deficient.
bool solve_constrained(const WeightedCoalitions& c, const std::vector<double>& values, double base, double delta,
                       std::size_t m, std::vector<double>& phi) {
    const std::size_t k = m - 1;
    Eigen::MatrixXd A(c.bits.size(), k);
    Eigen::VectorXd y(c.bits.size());
    Eigen::VectorXd w(c.bits.size());
    for (std::size_t r = 0; r < c.bits.size(); ++r) {
        const double last = c.bits[r][m - 1];
        for (std::size_t j = 0; j < k; ++j) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = c.bits[r][j] - last;
        y(static_cast<Eigen::Index>(r)) = values[r] - base - last * delta;
        w(static_cast<Eigen::Index>(r)) = c.weights[r];
    }
    const Eigen::MatrixXd AtW = A.transpose() * w.asDiagonal();
    const Eigen::MatrixXd normal = AtW * A;
    const Eigen::VectorXd rhs = AtW * y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(k)) return false;
    const Eigen::VectorXd sol = qr.solve(rhs);
    phi.assign(m, 0.0);
    double partial = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        phi[j] = sol(static_cast<Eigen::Index>(j));
        partial += phi[j];
    }
    phi[m - 1] = delta - partial;
    return true;
}

}  // namespace

Attribution kernel_shap(const MarginFn& model, std::span<const double> row, const Matrix& background,
                        const std::vector<std::string>& feature_names, std::size_t n_samples, std::uint64_t seed) {
    check_inputs(row, background, feature_names);
    const std::size_t m = row.size();
    if (n_samples < 2 * m + 2) {
        throw ExplainError("kernel_shap needs n_samples >= 2M+2 (" + std::to_string(2 * m + 2) + ")");
    }
    CoalitionValue v(model, row, background);
    Attribution a = make_attribution(row, feature_names);
    a.base_value = v(std::vector<char>(m, 0));
    a.model_output = v(std::vector<char>(m, 1));
    const double delta = a.model_output - a.base_value;
    if (m == 1) {
        a.phi[0] = delta;
        return a;
    }

    const bool enumerate = m < 63 && n_samples + 2 >= (std::uint64_t{1} << m);
    for (int attempt = 0; attempt < 2; ++attempt) {
        WeightedCoalitions c;
        if (enumerate) {
            c = enumerate_coalitions(m);
        } else {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
            c = sample_coalitions(m, n_samples, rng);
        }
        std::vector<double> values(c.bits.size());
        for (std::size_t r = 0; r < c.bits.size(); ++r) values[r] = v(c.bits[r]);
        if (solve_constrained(c, values, a.base_value, delta, m, a.phi)) return a;
        if (enumerate) break;
    }
    throw ExplainError("kernel_shap: coalition design is degenerate after resampling");
}

std::vector<Importance> global_importance(const std::vector<Attribution>& attributions) {
    if (attributions.empty()) throw ExplainError("global_importance needs at least one attribution");
    const auto& names = attributions.front().features;
    std::vector<Importance> out(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) out[i].feature = names[i];
    for (const auto& a : attributions) {
        if (a.features != names) throw ExplainError("attributions carry inconsistent feature sets");
        for (std::size_t i = 0; i < names.size(); ++i) out[i].mean_abs_phi += std::abs(a.phi[i]);
    }
    for (auto& imp : out) imp.mean_abs_phi /= static_cast<double>(attributions.size());
    std::sort(out.begin(), out.end(), [](const Importance& x, const Importance& y) {
        if (x.mean_abs_phi != y.mean_abs_phi) return x.mean_abs_phi > y.mean_abs_phi;
        return x.feature < y.feature;
    });
    return out;
}

Matrix stratified_background(const Matrix& rows, std::span<const int> labels, std::size_t n, std::uint64_t seed) {
    if (rows.rows != labels.size()) throw ShapeError("labels do not match rows");
    if (n >= rows.rows) return rows;
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    Rng rng(derive_seed(seed, {0x6267ULL}));
    rng.shuffle(pos);
    rng.shuffle(neg);
    auto n_pos = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * static_cast<double>(pos.size()) / static_cast<double>(rows.rows)));
    n_pos = std::min(n_pos, pos.size());
    const std::size_t n_neg = std::min(n - n_pos, neg.size());
    std::vector<std::size_t> idx(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
    idx.insert(idx.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
    std::sort(idx.begin(), idx.end());
    return rows.select_rows(idx);
}

ForcePlot force_plot_export(const Attribution& attr, const std::vector<std::string>& value_display) {
    if (!value_display.empty() && value_display.size() != attr.features.size()) {
        throw ShapeError("value_display does not match the attribution's features");
    }
    ForcePlot plot;
    plot.base = attr.base_value;
    plot.final_value = attr.model_output;
    plot.target_space = attr.target_space == TargetSpace::log_odds ? "log_odds" : "probability";
    std::vector<std::size_t> order(attr.features.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(attr.phi[a]) > std::abs(attr.phi[b]); });
    for (auto i : order) {
        ForceBar bar;
        bar.feature = attr.features[i];
        bar.value_display = value_display.empty() ? format_double(attr.feature_values[i]) : value_display[i];
        bar.phi = attr.phi[i];
        bar.direction = attr.phi[i] > 0   ? Direction::toward_completion
                        : attr.phi[i] < 0 ? Direction::toward_non_completion
                                          : Direction::neutral;
        plot.bars.push_back(std::move(bar));
    }
    return plot;
}

namespace {

std::string_view direction_name(Direction d) {
    switch (d) {
        case Direction::toward_completion: return "toward_completion";
        case Direction::toward_non_completion: return "toward_non_completion";
        case Direction::neutral: break;
    }
    return "neutral";
}

Direction direction_from(std::string_view s) {
    if (s == "toward_completion") return Direction::toward_completion;
    if (s == "toward_non_completion") return Direction::toward_non_completion;
    if (s == "neutral") return Direction::neutral;
    throw ExplainError("unknown bar direction '" + std::string(s) + "'");
}

}  // namespace

json force_plot_to_json(const ForcePlot& plot) {
    json bars = json::array();
    for (const auto& b : plot.bars) {
        bars.push_back({{"feature", b.feature},
                        {"value_display", b.value_display},
                        {"phi", b.phi},
                        {"direction", direction_name(b.direction)}});
    }
    return json{{"base", plot.base}, {"final", plot.final_value}, {"target_space", plot.target_space}, {"bars", bars}};
}

ForcePlot force_plot_from_json(const json& doc) {
    ForcePlot plot;
    try {
        plot.base = doc.at("base").get<double>();
        plot.final_value = doc.at("final").get<double>();
        plot.target_space = doc.value("target_space", std::string("log_odds"));
        for (const auto& b : doc.at("bars")) {
            ForceBar bar;
            bar.feature = b.at("feature").get<std::string>();
            bar.value_display = b.at("value_display").get<std::string>();
            bar.phi = b.at("phi").get<double>();
            bar.direction = b.contains("direction")
                                ? direction_from(b["direction"].get<std::string>())
                                : (bar.phi > 0 ? Direction::toward_completion
                                               : bar.phi < 0 ? Direction::toward_non_completion : Direction::neutral);
            plot.bars.push_back(std::move(bar));
        }
    } catch (const json::exception& e) {
        throw ExplainError(std::string("malformed plot document: ") + e.what());
    }
    return plot;
}

json attribution_to_json(const Attribution& a) {
    json phi = json::object();
    for (std::size_t i = 0; i < a.features.size(); ++i) phi[a.features[i]] = a.phi[i];
    return json{{"base_value", a.base_value},
                {"model_output", a.model_output},
                {"target_space", a.target_space == TargetSpace::log_odds ? "log_odds" : "probability"},
                {"phi", phi},
                {"feature_values", a.feature_values},
                {"features", a.features}};
}

}  // namespace prescriptive
