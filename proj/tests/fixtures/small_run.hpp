// Builds a small synthesised, prepared and trained run directory once per process.
#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "prescriptive/config.hpp"
#include "prescriptive/pipeline.hpp"
#include "prescriptive/service.hpp"

namespace small_run {

using namespace prescriptive;

inline Config config() {
    Config cfg;
    cfg.seed = 17;
    cfg.generator.n_rows = 1200;
    cfg.hyperparams.n_estimators = 40;
    cfg.hyperparams.max_depth = 3;
    cfg.hyperparams.learning_rate = 0.2;
    cfg.shap_background = 30;
    cfg.kernel_samples = 256;
    cfg.global_rows = 10;
    cfg.anchors.n_samples = 300;
    cfg.ga.population = 80;
    cfg.ga.generations = 40;
    cfg.service.max_concurrent_whatif = 2;
    return cfg;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("prescribe-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline const RunPaths& paths() {
    static const RunPaths p = [] {
        RunPaths rp{temp_dir("run")};
        const auto cfg = config();
        cmd_synth(cfg, rp);
        cmd_prepare(cfg, rp);
        cmd_train(cfg, rp);
        return rp;
    }();
    return p;
}

inline std::shared_ptr<const Snapshot> snapshot() {
    static const auto s = load_snapshot(paths(), config());
    return s;
}

// At-risk learners, highest risk first.
inline std::vector<std::string> at_risk_ids(const Snapshot& s) {
    std::vector<std::pair<double, std::string>> risk;
    const auto list = student_list_json(s);
    for (const auto& st : list["students"]) {
        if (st["at_risk"].get<bool>()) risk.push_back({-st["non_completion_risk"].get<double>(), st["learner_id"]});
    }
    std::sort(risk.begin(), risk.end());
    std::vector<std::string> ids;
    for (auto& [r, id] : risk) ids.push_back(id);
    return ids;
}

// First at-risk learner with a feasible what-if under the default constraints.
inline std::string actionable_learner(Service& svc) {
    for (const auto& id : at_risk_ids(*svc.snapshot())) {
        if (svc.handle("POST", "/students/" + id + "/whatif", "{}").status == 200) return id;
    }
    return {};
}

}  // namespace small_run
