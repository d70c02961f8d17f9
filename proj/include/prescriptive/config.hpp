#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "prescriptive/anchors.hpp"
#include "prescriptive/counterfactual.hpp"
#include "prescriptive/gbm.hpp"
#include "prescriptive/llm_client.hpp"
#include "prescriptive/synth.hpp"
#include "prescriptive/tuning.hpp"

namespace prescriptive {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token;  // empty = no auth
    std::size_t max_concurrent_whatif = 2;
};

// Every module default in one place. A config file overrides any subset of keys;
// command-line flags override the file.
struct Config {
    std::uint64_t seed = 42;
    GeneratorConfig generator = GeneratorConfig::defaults();
    std::string cohort_feature = "programme_title";
    Hyperparams hyperparams;
    SearchSpace search = SearchSpace::defaults();
    std::size_t n_iter = 20;
    std::size_t k_tune = 5;
    std::size_t k_folds = 10;
    std::size_t shap_background = 100;
    std::size_t kernel_samples = 2048;
    std::size_t global_rows = 200;
    AnchorConfig anchors;
    CfWeights cf_weights;
    GaConfig ga;
    std::size_t cf_k = 3;
    std::size_t max_changed = 3;
    LlmConfig llm;
    ServiceConfig service;

    nlohmann::json to_json() const;
    static Config from_json(const nlohmann::json& j);
    static Config load(const std::string& path);
};

}  // namespace prescriptive
