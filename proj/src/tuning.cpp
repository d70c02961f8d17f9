#include "prescriptive/tuning.hpp"

#include <algorithm>
#include <numeric>

#include "prescriptive/errors.hpp"
#include "prescriptive/random.hpp"

namespace prescriptive {

using nlohmann::json;

std::size_t SearchSpace::size() const {
    return n_estimators.size() * max_depth.size() * learning_rate.size() * subsample.size() *
           min_samples_leaf.size() * min_samples_split.size();
}

Hyperparams SearchSpace::at(std::size_t index) const {
    if (index >= size()) throw ConfigError("search space index out of range");
    Hyperparams hp;
    auto pick = [&index](const auto& values) {
        const auto& v = values[index % values.size()];
        index /= values.size();
        return v;
    };
    hp.min_samples_split = pick(min_samples_split);
    hp.min_samples_leaf = pick(min_samples_leaf);
    hp.subsample = pick(subsample);
    hp.learning_rate = pick(learning_rate);
    hp.max_depth = pick(max_depth);
    hp.n_estimators = pick(n_estimators);
    return hp;
}

bool SearchSpace::contains(const Hyperparams& hp) const {
    auto has = [](const auto& values, auto v) { return std::find(values.begin(), values.end(), v) != values.end(); };
    return has(n_estimators, hp.n_estimators) && has(max_depth, hp.max_depth) && has(learning_rate, hp.learning_rate) &&
           has(subsample, hp.subsample) && has(min_samples_leaf, hp.min_samples_leaf) &&
           has(min_samples_split, hp.min_samples_split);
}

SearchSpace SearchSpace::defaults() {
    SearchSpace s;
    s.n_estimators = {50, 100, 150};
    s.max_depth = {3, 4, 5};
    s.learning_rate = {0.05, 0.1, 0.2};
    s.subsample = {0.7, 0.85, 1.0};
    s.min_samples_leaf = {1, 0.01, 0.115};
    s.min_samples_split = {2, 0.1, 0.47};
    return s;
}

SearchSpace SearchSpace::single(const Hyperparams& hp) {
    SearchSpace s;
    s.n_estimators = {hp.n_estimators};
    s.max_depth = {hp.max_depth};
    s.learning_rate = {hp.learning_rate};
    s.subsample = {hp.subsample};
    s.min_samples_leaf = {hp.min_samples_leaf};
    s.min_samples_split = {hp.min_samples_split};
    return s;
}

json SearchSpace::to_json() const {
    return json{{"n_estimators", n_estimators},         {"max_depth", max_depth},
                {"learning_rate", learning_rate},       {"subsample", subsample},
                {"min_samples_leaf", min_samples_leaf}, {"min_samples_split", min_samples_split}};
}

SearchSpace SearchSpace::from_json(const json& j) {
    SearchSpace s = defaults();
    try {
        if (j.contains("n_estimators")) s.n_estimators = j["n_estimators"].get<std::vector<int>>();
        if (j.contains("max_depth")) s.max_depth = j["max_depth"].get<std::vector<int>>();
        if (j.contains("learning_rate")) s.learning_rate = j["learning_rate"].get<std::vector<double>>();
        if (j.contains("subsample")) s.subsample = j["subsample"].get<std::vector<double>>();
        if (j.contains("min_samples_leaf")) s.min_samples_leaf = j["min_samples_leaf"].get<std::vector<double>>();
        if (j.contains("min_samples_split")) s.min_samples_split = j["min_samples_split"].get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed search space: ") + e.what());
    }
    if (s.size() == 0) throw ConfigError("search space is empty");
    return s;
}

json TuningResult::to_json() const {
    json trials_json = json::array();
    for (const auto& t : trials) {
        trials_json.push_back({{"hyperparams", t.hyperparams.to_json()},
                               {"f1_mean", t.metrics.f1.mean},
                               {"f1_std", t.metrics.f1.std}});
    }
    return json{{"best", best.to_json()}, {"final_metrics", final_metrics.to_json()}, {"trials", trials_json}};
}

TuningResult random_search_cv(const EncodedMatrix& data, const SearchSpace& space, std::size_t n_iter,
                              std::size_t k_tune, std::size_t k_final, std::uint64_t seed) {
    if (n_iter < 1) throw ConfigError("n_iter must be >= 1");
    const std::size_t total = space.size();
    if (total == 0) throw ConfigError("search space is empty");

    std::vector<std::size_t> picks(total);
    std::iota(picks.begin(), picks.end(), 0);
    if (n_iter < total) {
        Rng rng(derive_seed(seed, {0x74756e65ULL}));
        for (std::size_t i = 0; i < n_iter; ++i) std::swap(picks[i], picks[i + rng.below(total - i)]);
        picks.resize(n_iter);
    }

    const auto tune_folds = grouped_kfold(std::span<const std::string>(data.learner_ids), k_tune,
                                          derive_seed(seed, {1}));
    TuningResult result;
    std::size_t best = 0;
    for (std::size_t i = 0; i < picks.size(); ++i) {
        const auto hp = space.at(picks[i]);
        auto metrics = cross_validate(data, tune_folds, hp, derive_seed(seed, {2, picks[i]}));
        result.trials.push_back({hp, std::move(metrics)});
        if (result.trials[i].metrics.f1.mean > result.trials[best].metrics.f1.mean) best = i;
    }
    result.best = result.trials[best].hyperparams;

    const auto final_folds = grouped_kfold(std::span<const std::string>(data.learner_ids), k_final,
                                           derive_seed(seed, {3}));
    result.final_metrics = cross_validate(data, final_folds, result.best, derive_seed(seed, {4}));
    return result;
}

}  // namespace prescriptive
