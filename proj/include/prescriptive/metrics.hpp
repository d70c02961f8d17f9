#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/dataset.hpp"
#include "prescriptive/errors.hpp"
#include "prescriptive/gbm.hpp"

namespace prescriptive {

// Point scores for one test fold, in percent. Positive class = completed.
struct FoldScores {
    double f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> auc;  // absent when the fold holds one class
    double recall = 0.0;
    double precision = 0.0;
    std::string auc_error;
};

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation across folds
};

struct Metrics {
    MetricSummary f1, accuracy, auc, recall, precision;
    std::vector<FoldScores> folds;

    nlohmann::json to_json() const;
};

struct MetricError : Error {
    using Error::Error;
};

// Mann-Whitney AUC with average ranks for ties; throws MetricError on a one-class set.
double roc_auc(std::span<const int> labels, std::span<const double> scores);

double f1_from(double precision, double recall);

// predicted: hard labels; scores: ranking scores for AUC.
FoldScores score_fold(std::span<const int> labels, std::span<const int> predicted, std::span<const double> scores);
Metrics summarize(std::vector<FoldScores> folds);

enum class BaselineKind { stratified, mode };

struct BaselineModel {
    BaselineKind kind = BaselineKind::mode;
    double prevalence = 0.0;
    int majority = 1;
    std::uint64_t seed = 0;

    // Predictions for n rows; `stream` separates independent evaluation draws.
    std::vector<int> predict(std::size_t n, std::uint64_t stream = 0) const;
};

BaselineModel train_baseline(BaselineKind kind, std::span<const int> labels, std::uint64_t seed);

// Single-set evaluation; std fields are zero.
Metrics evaluate(const TreeEnsemble& m, const Matrix& X, std::span<const int> labels);
Metrics evaluate(const BaselineModel& m, std::span<const int> labels, std::uint64_t stream = 0);

// Grouped cross-validation of a GBM configuration or a baseline.
Metrics cross_validate(const EncodedMatrix& data, const std::vector<Fold>& folds, const Hyperparams& hp,
                       std::uint64_t seed);
Metrics cross_validate_baseline(const EncodedMatrix& data, const std::vector<Fold>& folds, BaselineKind kind,
                                std::uint64_t seed);

}  // namespace prescriptive
