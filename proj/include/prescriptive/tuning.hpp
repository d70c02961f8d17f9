#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "prescriptive/gbm.hpp"
#include "prescriptive/metrics.hpp"

namespace prescriptive {

// Cartesian grid of candidate values; configurations are indexed in row-major order.
struct SearchSpace {
    std::vector<int> n_estimators;
    std::vector<int> max_depth;
    std::vector<double> learning_rate;
    std::vector<double> subsample;
    std::vector<double> min_samples_leaf;
    std::vector<double> min_samples_split;

    std::size_t size() const;
    Hyperparams at(std::size_t index) const;
    bool contains(const Hyperparams& hp) const;

    // Neighbourhood of the tuned gradient-boosting row (subsample 0.85, depth 5, lr 0.2, ...),
    // scaled to desk-sized ensembles.
    static SearchSpace defaults();
    static SearchSpace single(const Hyperparams& hp);
    nlohmann::json to_json() const;
    static SearchSpace from_json(const nlohmann::json& j);
};

struct Trial {
    Hyperparams hyperparams;
    Metrics metrics;
};

struct TuningResult {
    Hyperparams best;
    Metrics final_metrics;  // fresh k_final grouped folds
    std::vector<Trial> trials;

    nlohmann::json to_json() const;
};

// Random grid search: n_iter distinct configurations (all of them when n_iter >= |space|),
// chosen by mean F1 over k_tune grouped folds, then re-scored on k_final fresh grouped folds.
TuningResult random_search_cv(const EncodedMatrix& data, const SearchSpace& space, std::size_t n_iter,
                              std::size_t k_tune, std::size_t k_final, std::uint64_t seed);

}  // namespace prescriptive
