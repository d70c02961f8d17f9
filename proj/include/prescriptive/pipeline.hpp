#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/anchors.hpp"
#include "prescriptive/config.hpp"
#include "prescriptive/dataset.hpp"
#include "prescriptive/features.hpp"
#include "prescriptive/gbm.hpp"

namespace prescriptive {

struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path file(const std::string& name) const { return dir / name; }
    std::filesystem::path records() const { return file("records.csv"); }
    std::filesystem::path schema() const { return file("schema.json"); }
    std::filesystem::path stats() const { return file("cohort_stats.txt"); }
    std::filesystem::path engineered() const { return file("engineered.csv"); }
    std::filesystem::path predictive_model() const { return file("model_predictive.gbm"); }
    std::filesystem::path prescriptive_model() const { return file("model_prescriptive.gbm"); }
    std::filesystem::path tuning() const { return file("tuning.json"); }
    std::filesystem::path evaluation() const { return file("evaluation.json"); }
    std::filesystem::path manifest() const { return file("manifest.json"); }
    std::filesystem::path config() const { return file("config.json"); }
    std::filesystem::path drafts() const { return file("drafts.jsonl"); }
};

// Writes the file and records its path and sha256 in manifest.json.
void write_artifact(const RunPaths& paths, const std::string& name, const std::string& contents);
void record_command(const RunPaths& paths, const std::string& command, const Config& cfg,
                    const nlohmann::json& args = nlohmann::json::object());

// Pipeline steps. Each reads its inputs from the run directory and writes its outputs there.
void cmd_synth(const Config& cfg, const RunPaths& paths);
void cmd_prepare(const Config& cfg, const RunPaths& paths);
void cmd_train(const Config& cfg, const RunPaths& paths);
nlohmann::json cmd_tune(const Config& cfg, const RunPaths& paths);
nlohmann::json cmd_evaluate(const Config& cfg, const RunPaths& paths);
nlohmann::json cmd_explain_global(const Config& cfg, const RunPaths& paths);
nlohmann::json cmd_explain_local(const Config& cfg, const RunPaths& paths, const std::string& learner_id);
nlohmann::json cmd_cf(const Config& cfg, const RunPaths& paths, const std::string& learner_id, std::size_t k,
                      std::size_t max_changed);
nlohmann::json cmd_feedback(const Config& cfg, const RunPaths& paths, const std::string& learner_id, int pf);

std::string evaluation_table(const nlohmann::json& report);

// Hyperparameters from tuning.json when present, else the config's.
Hyperparams resolved_hyperparams(const Config& cfg, const RunPaths& paths);

// Immutable view over a prepared and trained run directory.
struct Snapshot {
    Config cfg;
    FeatureSchema schema;
    Dataset raw;
    Dataset engineered;  // engineered then imputed
    StatsStore stats;
    TreeEnsemble predictive;
    TreeEnsemble prescriptive;
    std::vector<std::string> predictive_features;
    std::vector<std::string> prescriptive_features;
    FeatureFrame pred_frame;
    FeatureFrame presc_frame;
    std::vector<std::string> cohort_keys;        // per row
    std::map<std::string, std::size_t> latest;  // learner -> row of their latest year
    Matrix shap_background;
    AnchorData anchor_data;
    std::string version;

    std::size_t row_of(const std::string& learner_id) const;  // NotFound when absent
    std::string raw_display(std::size_t row, const std::string& feature) const;
    std::string programme_display(std::size_t row) const;
};

std::shared_ptr<const Snapshot> load_snapshot(const RunPaths& paths, const Config& cfg);

std::string percent_text(double p);

nlohmann::json student_list_json(const Snapshot& s);
nlohmann::json prediction_json(const Snapshot& s, const std::string& learner_id);
nlohmann::json explanation_json(const Snapshot& s, const std::string& learner_id);
// Request keys: k, seed, max_changed, frozen, actionable, ranges (raw units), monotone.
// Overrides may only tighten the defaults.
nlohmann::json whatif_json(const Snapshot& s, const std::string& learner_id, const nlohmann::json& request);
// pathway = one element of whatif_json(...)["pathways"].
nlohmann::json feedback_json(const Snapshot& s, const std::string& learner_id, const nlohmann::json& pathway,
                             int pf_index, const LlmConfig& llm);

}  // namespace prescriptive
