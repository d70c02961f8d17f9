// prescribe: command-line driver for the learner-risk pipeline.
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "prescriptive/config.hpp"
#include "prescriptive/errors.hpp"
#include "prescriptive/pipeline.hpp"
#include "prescriptive/service.hpp"

using namespace prescriptive;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string run_dir = "run";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
    cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--run-dir", c.run_dir, "Run directory for inputs and artifacts")->capture_default_str();
}

Config resolve(const Common& c) {
    Config cfg = c.config_path.empty() ? Config{} : Config::load(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learner completion risk: predict, explain, prescribe"};
    app.require_subcommand(1);

    Common common;
    std::string student;
    std::size_t k = 3;
    std::size_t max_changed = 3;
    int pf = 1;
    std::optional<std::size_t> rows;
    std::optional<double> prevalence;
    std::optional<std::size_t> n_iter;
    std::string host;
    int port = 0;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic learner dataset");
    synth->add_option("--rows", rows, "Row count");
    synth->add_option("--prevalence", prevalence, "Row-level fraction of completed outcomes");
    auto* prepare = app.add_subcommand("prepare", "Fit cohort stats and engineer z-score features");
    auto* train = app.add_subcommand("train", "Train the predictive and prescriptive models");
    auto* tune = app.add_subcommand("tune", "Random search over the hyperparameter grid");
    tune->add_option("--n-iter", n_iter, "Configurations to try");
    auto* evaluate = app.add_subcommand("evaluate", "Grouped cross-validation report with baselines");
    auto* global = app.add_subcommand("explain-global", "Kernel SHAP over a sample of rows");
    auto* local = app.add_subcommand("explain-local", "Force-plot data and anchor rule for one student");
    local->add_option("--student", student, "Learner id")->required();
    auto* cf = app.add_subcommand("cf", "Counterfactual pathways for one student");
    cf->add_option("--student", student, "Learner id")->required();
    cf->add_option("--k", k, "Pathways to return")->capture_default_str();
    cf->add_option("--max-changed", max_changed, "Most features a pathway may change")->capture_default_str();
    auto* fb = app.add_subcommand("feedback", "Status and remedial text for one stored pathway");
    fb->add_option("--student", student, "Learner id")->required();
    fb->add_option("--pf", pf, "Pathway number (1-based)")->capture_default_str();
    auto* srv = app.add_subcommand("serve", "Start the HTTP service");
    srv->add_option("--host", host, "Bind address");
    srv->add_option("--port", port, "Port");

    for (auto* cmd : {synth, prepare, train, tune, evaluate, global, local, cf, fb, srv}) add_common(cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0 && !dynamic_cast<const CLI::CallForHelp*>(&e)) std::cerr << app.help();
        return code;
    }

    try {
        Config cfg = resolve(common);
        const RunPaths paths{common.run_dir};
        if (*synth) {
            if (rows) cfg.generator.n_rows = *rows;
            if (prevalence) cfg.generator.prevalence = *prevalence;
            cfg.generator.validate();
            cmd_synth(cfg, paths);
            std::cout << "wrote " << paths.records().string() << "\n";
        } else if (*prepare) {
            cmd_prepare(cfg, paths);
            std::cout << "wrote " << paths.engineered().string() << "\n";
        } else if (*train) {
            cmd_train(cfg, paths);
            std::cout << "wrote " << paths.predictive_model().string() << " and "
                      << paths.prescriptive_model().string() << "\n";
        } else if (*tune) {
            if (n_iter) cfg.n_iter = *n_iter;
            const auto doc = cmd_tune(cfg, paths);
            std::cout << doc["best"].dump() << "\n";
        } else if (*evaluate) {
            std::cout << evaluation_table(cmd_evaluate(cfg, paths));
        } else if (*global) {
            const auto doc = cmd_explain_global(cfg, paths);
            for (const auto& imp : doc["importance"]) {
                std::cout << imp["feature"].get<std::string>() << "\t" << imp["mean_abs_phi"].get<double>() << "\n";
            }
        } else if (*local) {
            const auto doc = cmd_explain_local(cfg, paths, student);
            std::cout << doc["anchor"]["rule_text"].get<std::string>();
        } else if (*cf) {
            const auto doc = cmd_cf(cfg, paths, student, k, max_changed);
            std::cout << doc["pathways"].size() << " pathway(s) written to " << common.run_dir << "\n";
        } else if (*fb) {
            const auto doc = cmd_feedback(cfg, paths, student, pf);
            std::cout << doc["status"]["text"].get<std::string>() << "\n" << doc["remedial"]["text"].get<std::string>();
        } else if (*srv) {
            if (!host.empty()) cfg.service.host = host;
            if (port) cfg.service.port = port;
            Service service(paths, cfg, nullptr, paths.drafts().string());
            serve(service, cfg.service.host, cfg.service.port);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
