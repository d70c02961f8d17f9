#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/dataset.hpp"

namespace prescriptive {

struct TreeNode {
    int feature = -1;  // column index; -1 marks a leaf
    double threshold = 0.0;  // x <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf score

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
    std::size_t depth() const;
    bool operator==(const Tree&) const = default;
};

// min_samples_* below 1 are fractions of the rows seen by the tree, otherwise counts.
struct Hyperparams {
    int n_estimators = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double subsample = 1.0;
    double min_samples_leaf = 1;
    double min_samples_split = 2;

    void validate() const;
    nlohmann::json to_json() const;
    static Hyperparams from_json(const nlohmann::json& j);
    std::string to_string() const;
    bool operator==(const Hyperparams&) const = default;
};

// Additive model over encoded columns; scores are log-odds of completion.
struct TreeEnsemble {
    std::vector<Tree> trees;
    double learning_rate = 0.1;
    double base_score = 0.0;
    Encoding encoding;  // column layout the trees were trained on
    Hyperparams hyperparams;
    std::uint64_t seed = 0;
    std::string schema_version;

    std::size_t width() const { return encoding.width(); }

    double margin(std::span<const double> encoded_row) const;
    // Probability of completion (label 1); non-completion risk is 1 - this.
    double predict_proba(std::span<const double> encoded_row) const;
    std::vector<double> predict_proba(const Matrix& encoded_rows) const;

    // Feature-level rows (categoricals as category index), encoded on the fly.
    double margin_features(std::span<const double> feature_row) const;
    double proba_features(std::span<const double> feature_row) const;

    bool operator==(const TreeEnsemble&) const = default;
};

double sigmoid(double x);
double logit(double p);

// Logistic-loss gradient boosting with exact greedy splits and per-tree row subsampling.
TreeEnsemble train_gbm(const Matrix& X, std::span<const int> labels, const Hyperparams& hp, std::uint64_t seed,
                       const Encoding& encoding = {});
TreeEnsemble train_gbm(const EncodedMatrix& data, const Hyperparams& hp, std::uint64_t seed);

std::string model_to_text(const TreeEnsemble& m);
TreeEnsemble model_from_text(std::string_view text);
void save_model(const TreeEnsemble& m, const std::string& path);
TreeEnsemble load_model(const std::string& path);

}  // namespace prescriptive
