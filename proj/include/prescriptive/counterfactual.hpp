#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/errors.hpp"
#include "prescriptive/schema.hpp"
#include "prescriptive/shap.hpp"

namespace prescriptive {

enum class Monotone { any, increase_only, decrease_only };

// Search-space description of one model feature (model space: z-scores for
// engineered features, raw values otherwise, category index for categoricals).
struct CfFeature {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;
    std::size_t n_categories = 0;
    long missing_category = -1;  // never proposed as a target

    std::vector<double> grid() const;
    double scale() const;  // range used to normalise distances
};

inline constexpr double kZGridStep = 0.25;
inline constexpr double kZGridBound = 3.0;

// Engineered features: [-3, 3] step 0.25; other numerics: schema range with the
// feature's step (1 for counts); categoricals: every category index.
std::vector<CfFeature> cf_space(const FeatureSchema& schema, const std::vector<std::string>& feature_names);

struct CfConstraints {
    std::set<std::string> actionable;
    std::set<std::string> frozen;
    std::map<std::string, std::pair<double, double>> ranges;  // model-space bounds
    std::size_t max_changed = 3;
    std::map<std::string, Monotone> monotone;

    void validate(const std::vector<CfFeature>& space) const;
    nlohmann::json to_json() const;
    static CfConstraints from_json(const nlohmann::json& j);
};

// Actionable = mutable and feedback-eligible; immutable features are frozen.
CfConstraints default_constraints(const FeatureSchema& schema, const std::vector<std::string>& feature_names);

struct CfWeights {
    double validity = 2.0;
    double proximity = 0.5;
    double sparsity = 0.3;
    double diversity = 0.2;
    nlohmann::json to_json() const;
    static CfWeights from_json(const nlohmann::json& j);
};

struct GaConfig {
    std::size_t population = 200;
    std::size_t generations = 100;
    double elitism = 0.1;
    double mutation_rate = 0.3;
    double decision_threshold = 0.5;
    nlohmann::json to_json() const;
    static GaConfig from_json(const nlohmann::json& j);
};

struct CfDelta {
    std::size_t feature = 0;
    std::string name;
    double from = 0.0;
    double to = 0.0;
    bool operator==(const CfDelta&) const = default;
};

struct CfScores {
    bool validity = false;
    double hinge = 0.0;      // log-odds shortfall below the decision threshold
    double proximity = 0.0;  // range-normalised L1, categorical change = 1
    std::size_t sparsity = 0;
    double diversity = 0.0;  // mean distance to the other selected candidates
    double total = 0.0;
    bool operator==(const CfScores&) const = default;
};

struct Counterfactual {
    std::vector<double> row;  // modified feature-level row
    std::vector<CfDelta> deltas;
    double prob_after = 0.0;
    CfScores scores;
    bool feasible = true;
    bool operator==(const Counterfactual&) const = default;
};

class NoFeasiblePathway : public Error {
public:
    NoFeasiblePathway(const std::string& what, std::optional<Counterfactual> best)
        : Error(what), best_invalid(std::move(best)) {}
    std::optional<Counterfactual> best_invalid;
};

double candidate_distance(std::span<const double> a, std::span<const double> b, const std::vector<CfFeature>& space);

CfScores score_candidate(const MarginFn& model, std::span<const double> row, std::span<const double> candidate,
                         const CfConstraints& c, const std::vector<CfFeature>& space, const CfWeights& w,
                         const std::vector<std::vector<double>>& others = {}, double threshold = 0.5);

// Seeded genetic search over actionable features. Returns up to k valid,
// mutually distinct candidates, best first.
std::vector<Counterfactual> generate_counterfactuals(const MarginFn& model, std::span<const double> row, std::size_t k,
                                                     const CfConstraints& c, const std::vector<CfFeature>& space,
                                                     const CfWeights& w, const GaConfig& ga, std::uint64_t seed);

std::vector<Counterfactual> filter_feasible(const std::vector<Counterfactual>& cfs, const CfConstraints& c);

// Table with columns [feature, actual, PF1..PFk]; "-" where a pathway leaves the feature unchanged.
using CfFormatter = std::function<std::string(std::size_t feature, double model_value)>;
struct CfTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};
CfTable cf_table(std::span<const double> row, const std::vector<Counterfactual>& cfs,
                 const std::vector<CfFeature>& space, const CfFormatter& fmt = {});

nlohmann::json counterfactual_to_json(const Counterfactual& cf);
Counterfactual counterfactual_from_json(const nlohmann::json& j);

}  // namespace prescriptive
