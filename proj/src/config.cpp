#include "prescriptive/config.hpp"

#include "prescriptive/errors.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

json Config::to_json() const {
    return json{{"seed", seed},
                {"generator", generator_config_to_json(generator)},
                {"cohort_feature", cohort_feature},
                {"hyperparams", hyperparams.to_json()},
                {"search", search.to_json()},
                {"n_iter", n_iter},
                {"k_tune", k_tune},
                {"k_folds", k_folds},
                {"shap_background", shap_background},
                {"kernel_samples", kernel_samples},
                {"global_rows", global_rows},
                {"anchors",
                 {{"tau", anchors.tau},
                  {"beam_width", anchors.beam_width},
                  {"max_length", anchors.max_length},
                  {"n_samples", anchors.n_samples},
                  {"z", anchors.z}}},
                {"cf_weights", cf_weights.to_json()},
                {"ga", ga.to_json()},
                {"cf_k", cf_k},
                {"max_changed", max_changed},
                {"llm", llm.to_json()},
                {"service",
                 {{"host", service.host},
                  {"port", service.port},
                  {"max_concurrent_whatif", service.max_concurrent_whatif}}}};
}

Config Config::from_json(const json& j) {
    Config c;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
        c.seed = j.value("seed", c.seed);
        if (j.contains("generator")) c.generator = generator_config_from_json(j["generator"]);
        c.cohort_feature = j.value("cohort_feature", c.cohort_feature);
        if (j.contains("hyperparams")) c.hyperparams = Hyperparams::from_json(j["hyperparams"]);
        if (j.contains("search")) c.search = SearchSpace::from_json(j["search"]);
        c.n_iter = j.value("n_iter", c.n_iter);
        c.k_tune = j.value("k_tune", c.k_tune);
        c.k_folds = j.value("k_folds", c.k_folds);
        c.shap_background = j.value("shap_background", c.shap_background);
        c.kernel_samples = j.value("kernel_samples", c.kernel_samples);
        c.global_rows = j.value("global_rows", c.global_rows);
        if (j.contains("anchors")) {
            const auto& a = j["anchors"];
            c.anchors.tau = a.value("tau", c.anchors.tau);
            c.anchors.beam_width = a.value("beam_width", c.anchors.beam_width);
            c.anchors.max_length = a.value("max_length", c.anchors.max_length);
            c.anchors.n_samples = a.value("n_samples", c.anchors.n_samples);
            c.anchors.z = a.value("z", c.anchors.z);
        }
        if (j.contains("cf_weights")) c.cf_weights = CfWeights::from_json(j["cf_weights"]);
        if (j.contains("ga")) c.ga = GaConfig::from_json(j["ga"]);
        c.cf_k = j.value("cf_k", c.cf_k);
        c.max_changed = j.value("max_changed", c.max_changed);
        if (j.contains("llm")) c.llm = LlmConfig::from_json(j["llm"]);
        if (j.contains("service")) {
            const auto& s = j["service"];
            c.service.host = s.value("host", c.service.host);
            c.service.port = s.value("port", c.service.port);
            c.service.token = s.value("token", c.service.token);
            c.service.max_concurrent_whatif = s.value("max_concurrent_whatif", c.service.max_concurrent_whatif);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.hyperparams.validate();
    c.anchors.validate();
    c.generator.validate();
    if (c.k_folds < 2 || c.k_tune < 2) throw ConfigError("fold counts must be >= 2");
    if (c.cf_k < 1) throw ConfigError("cf_k must be >= 1");
    if (c.service.max_concurrent_whatif < 1) throw ConfigError("max_concurrent_whatif must be >= 1");
    return c;
}

Config Config::load(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

}  // namespace prescriptive
