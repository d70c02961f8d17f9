#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "prescriptive/dataset.hpp"

namespace prescriptive {

// Model output in the explained space (log-odds for the boosted model) for one feature-level row.
using MarginFn = std::function<double(std::span<const double>)>;

enum class TargetSpace { log_odds, probability };

struct Attribution {
    double base_value = 0.0;  // mean model output over the background
    std::vector<std::string> features;
    std::vector<double> phi;
    std::vector<double> feature_values;
    double model_output = 0.0;
    TargetSpace target_space = TargetSpace::log_odds;

    double phi_of(std::string_view feature) const;
    double residual() const;  // base + sum(phi) - model_output
};

inline constexpr std::size_t kExactShapMaxFeatures = 12;

// Interventional Shapley values by subset enumeration (M <= 12).
Attribution exact_shap(const MarginFn& model, std::span<const double> row, const Matrix& background,
                       const std::vector<std::string>& feature_names);

// Kernel SHAP: Shapley-kernel weighted least squares over coalitions, with the
// efficiency constraint eliminated analytically. When n_samples covers every
// coalition the full enumeration is used; otherwise coalitions are sampled
// (size ~ kernel mass, paired with complements).
Attribution kernel_shap(const MarginFn& model, std::span<const double> row, const Matrix& background,
                        const std::vector<std::string>& feature_names, std::size_t n_samples, std::uint64_t seed);

struct Importance {
    std::string feature;
    double mean_abs_phi = 0.0;
};

// Descending mean |phi|, ties broken by feature name.
std::vector<Importance> global_importance(const std::vector<Attribution>& attributions);

// Up to n rows, sampled per class in proportion to class frequency.
Matrix stratified_background(const Matrix& rows, std::span<const int> labels, std::size_t n, std::uint64_t seed);

enum class Direction { toward_completion, toward_non_completion, neutral };

struct ForceBar {
    std::string feature;
    std::string value_display;
    double phi = 0.0;
    Direction direction = Direction::neutral;
    bool operator==(const ForceBar&) const = default;
};

struct ForcePlot {
    double base = 0.0;
    double final_value = 0.0;
    std::string target_space = "log_odds";
    std::vector<ForceBar> bars;  // largest |phi| first
    bool operator==(const ForcePlot&) const = default;
};

// value_display defaults to the model-space feature value when not supplied.
ForcePlot force_plot_export(const Attribution& attr, const std::vector<std::string>& value_display = {});
nlohmann::json force_plot_to_json(const ForcePlot& plot);
ForcePlot force_plot_from_json(const nlohmann::json& doc);

nlohmann::json attribution_to_json(const Attribution& a);

}  // namespace prescriptive
