#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/dataset.hpp"

namespace prescriptive {

// value = mean + per_year * year_index + signal * shift * [completed]
//       + cohort offset ~ N(0, cohort_sd) + learner_loading * latent + N(0, sd)
// then clamped to the schema range and rounded per unit.
struct NumericGenerator {
    double mean = 0.0;
    double sd = 1.0;
    double shift = 0.0;
    double cohort_sd = 0.0;
    double learner_loading = 0.0;
    double missing_rate = 0.0;
    double per_year = 0.0;
};

struct CategoricalGenerator {
    std::vector<double> weights_completed;
    std::vector<double> weights_non_completed;
};

// Schema-faithful stand-in for an institutional cohort extract. Rows are emitted
// learner by learner (one per enrolled year); the row-level class balance is hit
// exactly by trimming the last learner of each class.
struct GeneratorConfig {
    FeatureSchema schema = default_schema();
    std::size_t n_rows = 5000;
    double prevalence = 0.719;
    int first_year = 2018;
    int last_year = 2022;
    int min_years_completed = 2;
    int max_years_completed = 4;
    int min_years_non_completed = 1;
    int max_years_non_completed = 2;
    double signal = 1.0;  // multiplies every outcome-conditional shift
    std::map<std::string, NumericGenerator> numeric;
    std::map<std::string, CategoricalGenerator> categorical;
    std::string credits_feature = "programme_credits";
    std::string programme_feature = "programme_title";
    std::map<std::string, double> credits_by_programme;

    static GeneratorConfig defaults();
    void validate() const;
};

nlohmann::json generator_config_to_json(const GeneratorConfig& c);
// Fields absent from the document keep their defaults.
GeneratorConfig generator_config_from_json(const nlohmann::json& doc);

Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace prescriptive
