#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/dataset.hpp"
#include "prescriptive/schema.hpp"

namespace prescriptive {

// Predicted class (1 = completed) for a feature-level row.
using ClassFn = std::function<int(std::span<const double>)>;

enum class PredicateOp { le, gt, eq };

struct Predicate {
    std::size_t feature = 0;
    std::string name;
    PredicateOp op = PredicateOp::le;
    double value = 0.0;

    bool holds(std::span<const double> row) const;
    bool holds(double v) const;
    std::string key() const;  // canonical text, used for ordering and dedup
    bool operator==(const Predicate&) const = default;
};

std::string_view op_symbol(PredicateOp op);

struct AnchorRule {
    std::vector<Predicate> predicates;  // sorted by feature index
    double precision = 0.0;
    double precision_lower = 0.0;
    double precision_upper = 1.0;
    double coverage = 0.0;
    std::size_t n_samples = 0;
    int predicted_class = 0;
    bool anchored = false;

    bool holds(std::span<const double> row) const;
    std::string key() const;
};

struct AnchorConfig {
    double tau = 0.95;
    std::size_t beam_width = 4;
    std::size_t max_length = 5;
    std::size_t n_samples = 1000;
    double z = 2.576;  // two-sided 99% binomial bound
    void validate() const;
};

// Feature-level training data the perturbation marginals and candidate
// thresholds are drawn from.
struct AnchorData {
    Matrix rows;
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;
};

struct PrecisionEstimate {
    double precision = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    double coverage = 0.0;
    std::size_t n_samples = 0;
};

// Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z);

// Coverage over data rows; precision over perturbations that resample every
// feature from its empirical marginal restricted to values the rule allows.
PrecisionEstimate estimate_precision_coverage(const std::vector<Predicate>& rule, int target_class,
                                              const ClassFn& model, const AnchorData& data, std::size_t n_samples,
                                              std::uint64_t seed, double z = 2.576);

double rule_coverage(const std::vector<Predicate>& rule, const Matrix& rows);

std::vector<Predicate> candidate_predicates(std::span<const double> row, const AnchorData& data);

AnchorRule find_anchor(const ClassFn& model, std::span<const double> row, const AnchorData& data,
                       const AnchorConfig& cfg, std::uint64_t seed);

// One predicate per line: "feature OP value". The formatter turns a model-space
// value into display text; the default prints the number.
using ValueFormatter = std::function<std::string(const Predicate&)>;
std::string render_rule(const AnchorRule& rule, const ValueFormatter& fmt = {});
nlohmann::json anchor_to_json(const AnchorRule& rule, std::span<const double> row, const ValueFormatter& fmt = {},
                              const std::function<std::string(std::size_t)>& actual = {});

}  // namespace prescriptive
