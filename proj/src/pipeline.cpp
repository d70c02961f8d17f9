#include "prescriptive/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "prescriptive/counterfactual.hpp"
#include "prescriptive/errors.hpp"
#include "prescriptive/feedback.hpp"
#include "prescriptive/metrics.hpp"
#include "prescriptive/random.hpp"
#include "prescriptive/shap.hpp"
#include "prescriptive/tuning.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
    try {
        return json::parse(read_file(p.string()));
    } catch (const json::parse_error& e) {
        throw Error(p.string() + " is not valid JSON: " + e.what());
    }
}

json load_manifest(const RunPaths& paths) {
    if (!fs::exists(paths.manifest())) return json{{"artifacts", json::object()}, {"commands", json::array()}};
    return read_json(paths.manifest());
}

void require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) throw Error("missing " + p.string() + " (run `" + producer + "` first)");
}

Dataset load_engineered(const RunPaths& paths) {
    require(paths.engineered(), "prepare");
    auto schema = load_schema(paths.schema().string());
    return impute(load_dataset(paths.engineered().string(), schema));
}

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

}  // namespace

void write_artifact(const RunPaths& paths, const std::string& name, const std::string& contents) {
    fs::create_directories(paths.dir);
    write_file(paths.file(name).string(), contents);
    auto manifest = load_manifest(paths);
    manifest["artifacts"][name] = {{"path", name}, {"sha256", sha256_hex(contents)}, {"bytes", contents.size()}};
    write_file(paths.manifest().string(), manifest.dump(2) + "\n");
}

void record_command(const RunPaths& paths, const std::string& command, const Config& cfg, const json& args) {
    fs::create_directories(paths.dir);
    const auto cfg_text = cfg.to_json().dump(2) + "\n";
    write_file(paths.config().string(), cfg_text);
    auto manifest = load_manifest(paths);
    manifest["config"] = {{"path", "config.json"}, {"sha256", sha256_hex(cfg_text)}};
    manifest["commands"].push_back(
        {{"command", command}, {"seed", cfg.seed}, {"args", args}, {"config_sha256", sha256_hex(cfg_text)}});
    write_file(paths.manifest().string(), manifest.dump(2) + "\n");
}

void cmd_synth(const Config& cfg, const RunPaths& paths) {
    const auto data = generate_synthetic(cfg.generator, cfg.seed);
    write_artifact(paths, "schema.json", schema_to_json(cfg.generator.schema).dump(2) + "\n");
    write_artifact(paths, "records.csv", records_to_csv(data));
    record_command(paths, "synth", cfg, {{"rows", data.records.size()}, {"prevalence", data.prevalence()}});
}

void cmd_prepare(const Config& cfg, const RunPaths& paths) {
    require(paths.records(), "synth");
    require(paths.schema(), "synth");
    const auto raw = load_dataset(paths.records().string(), paths.schema().string());
    const auto cohort_of = cohort_by(raw.schema, cfg.cohort_feature);
    const auto stats = fit_cohort_stats(raw, cohort_of);
    const auto engineered = engineer(raw, stats, cohort_of);
    write_artifact(paths, "cohort_stats.txt", stats.to_text());
    write_artifact(paths, "engineered.csv", records_to_csv(engineered));
    record_command(paths, "prepare", cfg, {{"cohort_stats", stats.size()}});
}

Hyperparams resolved_hyperparams(const Config& cfg, const RunPaths& paths) {
    if (fs::exists(paths.tuning())) return Hyperparams::from_json(read_json(paths.tuning()).at("best"));
    return cfg.hyperparams;
}

void cmd_train(const Config& cfg, const RunPaths& paths) {
    const auto d = load_engineered(paths);
    const auto hp = resolved_hyperparams(cfg, paths);
    auto pred = train_gbm(impute_and_encode(d, d.schema.predictive_names()), hp, derive_seed(cfg.seed, {10}));
    auto presc = train_gbm(impute_and_encode(d, d.schema.prescriptive_names()), hp, derive_seed(cfg.seed, {11}));
    pred.schema_version = presc.schema_version = d.schema.version;
    write_artifact(paths, "model_predictive.gbm", model_to_text(pred));
    write_artifact(paths, "model_prescriptive.gbm", model_to_text(presc));
    record_command(paths, "train", cfg, {{"hyperparams", hp.to_json()}});
}

json cmd_tune(const Config& cfg, const RunPaths& paths) {
    const auto d = load_engineered(paths);
    const auto em = impute_and_encode(d, d.schema.predictive_names());
    const auto result = random_search_cv(em, cfg.search, cfg.n_iter, cfg.k_tune, cfg.k_folds, cfg.seed);
    auto doc = result.to_json();
    write_artifact(paths, "tuning.json", doc.dump(2) + "\n");
    record_command(paths, "tune", cfg, {{"n_iter", cfg.n_iter}, {"k_tune", cfg.k_tune}, {"k_final", cfg.k_folds}});
    return doc;
}

json cmd_evaluate(const Config& cfg, const RunPaths& paths) {
    const auto d = load_engineered(paths);
    const auto em = impute_and_encode(d, d.schema.predictive_names());
    const auto folds = grouped_kfold(std::span<const std::string>(em.learner_ids), cfg.k_folds, derive_seed(cfg.seed, {20}));
    const auto hp = resolved_hyperparams(cfg, paths);
    json models = json::array();
    models.push_back({{"name", "baseline_stratified"},
                      {"metrics", cross_validate_baseline(em, folds, BaselineKind::stratified, derive_seed(cfg.seed, {21})).to_json()}});
    models.push_back({{"name", "baseline_mode"},
                      {"metrics", cross_validate_baseline(em, folds, BaselineKind::mode, derive_seed(cfg.seed, {22})).to_json()}});
    models.push_back({{"name", "gradient_boosting"},
                      {"hyperparams", hp.to_json()},
                      {"metrics", cross_validate(em, folds, hp, derive_seed(cfg.seed, {23})).to_json()}});
    json report{{"k_folds", cfg.k_folds},
                {"rows", d.records.size()},
                {"learners", std::set<std::string>(em.learner_ids.begin(), em.learner_ids.end()).size()},
                {"prevalence", d.prevalence()},
                {"models", models}};
    write_artifact(paths, "evaluation.json", report.dump(2) + "\n");
    write_artifact(paths, "evaluation.txt", evaluation_table(report));
    record_command(paths, "evaluate", cfg, {{"k_folds", cfg.k_folds}});
    return report;
}

std::string evaluation_table(const json& report) {
    auto cell = [](const json& m) {
        return format_fixed(m.at("mean").get<double>(), 1) + " +/- " + format_fixed(m.at("std").get<double>(), 1);
    };
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %-14s %-14s %-14s %-14s %-14s\n", "model", "F1", "accuracy", "AUC",
                  "recall", "precision");
    out += line;
    for (const auto& m : report.at("models")) {
        const auto& x = m.at("metrics");
        std::snprintf(line, sizeof line, "%-22s %-14s %-14s %-14s %-14s %-14s\n",
                      m.at("name").get<std::string>().c_str(), cell(x.at("f1")).c_str(),
                      cell(x.at("accuracy")).c_str(), cell(x.at("auc")).c_str(), cell(x.at("recall")).c_str(),
                      cell(x.at("precision")).c_str());
        out += line;
    }
    return out;
}

std::size_t Snapshot::row_of(const std::string& learner_id) const {
    auto it = latest.find(learner_id);
    if (it == latest.end()) throw NotFound("student '" + learner_id + "' is not in the loaded cohort");
    return it->second;
}

std::string Snapshot::raw_display(std::size_t row, const std::string& feature) const {
    const auto idx = schema.index_of(feature);
    if (!idx) throw SchemaError("unknown feature '" + feature + "'");
    const auto& spec = schema.features[*idx];
    const auto& cell = raw.records.at(row).values[*idx];
    if (is_missing(cell)) return "missing";
    if (const auto* s = std::get_if<std::string>(&cell)) {
        auto ci = spec.category_index(*s);
        return ci ? spec.category_display(*ci) : *s;
    }
    return format_raw(round_raw(std::get<double>(cell), spec.unit), spec.unit) + unit_suffix(spec.unit);
}

std::string Snapshot::programme_display(std::size_t row) const {
    auto text = raw_display(row, cfg.cohort_feature);
    std::replace(text.begin(), text.end(), '_', ' ');
    return text;
}

std::shared_ptr<const Snapshot> load_snapshot(const RunPaths& paths, const Config& cfg) {
    require(paths.predictive_model(), "train");
    require(paths.prescriptive_model(), "train");
    require(paths.stats(), "prepare");
    auto s = std::make_shared<Snapshot>();
    s->cfg = cfg;
    s->schema = load_schema(paths.schema().string());
    s->raw = load_dataset(paths.records().string(), s->schema);
    s->engineered = load_engineered(paths);
    s->stats = StatsStore::load(paths.stats().string());
    const auto pred_text = read_file(paths.predictive_model().string());
    const auto presc_text = read_file(paths.prescriptive_model().string());
    s->predictive = model_from_text(pred_text);
    s->prescriptive = model_from_text(presc_text);
    s->predictive_features = s->predictive.encoding.feature_names();
    s->prescriptive_features = s->prescriptive.encoding.feature_names();
    if (s->raw.records.size() != s->engineered.records.size()) {
        throw Error("records.csv and engineered.csv disagree on row count; rerun `prepare`");
    }
    s->pred_frame = to_frame(s->engineered, s->predictive_features);
    s->presc_frame = to_frame(s->engineered, s->prescriptive_features);
    const auto cohort_of = cohort_by(s->schema, cfg.cohort_feature);
    for (std::size_t i = 0; i < s->raw.records.size(); ++i) {
        const auto& rec = s->raw.records[i];
        s->cohort_keys.push_back(cohort_of(rec));
        auto [it, fresh] = s->latest.emplace(rec.learner_id, i);
        if (!fresh && s->raw.records[it->second].academic_year < rec.academic_year) it->second = i;
    }
    std::vector<int> labels = s->pred_frame.labels;
    if (labels.empty()) labels.assign(s->pred_frame.values.rows, 1);
    s->shap_background = stratified_background(s->pred_frame.values, labels, cfg.shap_background,
                                               derive_seed(cfg.seed, {40}));
    s->anchor_data.rows = s->pred_frame.values;
    s->anchor_data.names = s->predictive_features;
    for (const auto& n : s->predictive_features) s->anchor_data.kinds.push_back(s->schema.at(n).kind);
    s->version = sha256_hex(pred_text + presc_text).substr(0, 12);
    return s;
}

std::string percent_text(double p) { return format_fixed(p * 100.0, 0) + "%"; }

namespace {

double completion_probability(const Snapshot& s, std::size_t r) {
    return s.predictive.proba_features(s.pred_frame.values.row(r));
}

}  // namespace

json student_list_json(const Snapshot& s) {
    json students = json::array();
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [id, r] : s.latest) order.emplace_back(1.0 - completion_probability(s, r), id);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [risk, id] : order) {
        const auto r = s.latest.at(id);
        students.push_back({{"learner_id", id},
                            {"academic_year", s.raw.records[r].academic_year},
                            {"programme", s.programme_display(r)},
                            {"non_completion_risk", risk},
                            {"at_risk", risk > 0.5}});
    }
    return json{{"model_version", s.version}, {"students", students}};
}

json prediction_json(const Snapshot& s, const std::string& learner_id) {
    const auto r = s.row_of(learner_id);
    const double p = completion_probability(s, r);
    return json{{"learner_id", learner_id},
                {"academic_year", s.raw.records[r].academic_year},
                {"model_version", s.version},
                {"completion_probability", p},
                {"non_completion_risk", 1.0 - p},
                {"predicted_outcome", p >= 0.5 ? "completed" : "non_completed"},
                {"at_risk", p < 0.5}};
}

json explanation_json(const Snapshot& s, const std::string& learner_id) {
    const auto r = s.row_of(learner_id);
    const auto row = s.pred_frame.values.row(r);
    const auto& cohort = s.cohort_keys[r];
    const MarginFn margin = [&s](std::span<const double> x) { return s.predictive.margin_features(x); };
    const auto attr = kernel_shap(margin, row, s.shap_background, s.predictive_features, s.cfg.kernel_samples,
                                  derive_seed(s.cfg.seed, {50, fnv1a(learner_id)}));
    std::vector<std::string> shown;
    for (const auto& n : s.predictive_features) shown.push_back(s.raw_display(r, n));
    const auto plot = force_plot_export(attr, shown);

    const ClassFn cls = [&s](std::span<const double> x) { return s.predictive.proba_features(x) >= 0.5 ? 1 : 0; };
    const auto rule = find_anchor(cls, row, s.anchor_data, s.cfg.anchors, derive_seed(s.cfg.seed, {51, fnv1a(learner_id)}));
    const ValueFormatter fmt = [&](const Predicate& p) {
        return display_value(s.schema.at(p.name), p.value, cohort, s.stats);
    };
    const auto actual = [&](std::size_t f) { return s.raw_display(r, s.predictive_features[f]); };
    auto anchor = anchor_to_json(rule, row, fmt, actual);
    anchor["rule_text"] = render_rule(rule, fmt);

    return json{{"learner_id", learner_id},
                {"model_version", s.version},
                {"prediction", prediction_json(s, learner_id)},
                {"force_plot", force_plot_to_json(plot)},
                {"anchor", anchor}};
}

json whatif_json(const Snapshot& s, const std::string& learner_id, const json& request) {
    const auto r = s.row_of(learner_id);
    if (!request.is_object()) throw ConfigError("what-if request must be a JSON object");
    const auto row = s.presc_frame.values.row(r);
    const auto& cohort = s.cohort_keys[r];
    const auto space = cf_space(s.schema, s.prescriptive_features);
    auto c = default_constraints(s.schema, s.prescriptive_features);
    c.max_changed = s.cfg.max_changed;
    const auto defaults = c.actionable;
    auto known = [&](const std::string& name) {
        if (std::find(s.prescriptive_features.begin(), s.prescriptive_features.end(), name) ==
            s.prescriptive_features.end()) {
            throw ConfigError("feature '" + name + "' is not used by the prescriptive model");
        }
    };

    std::size_t k = s.cfg.cf_k;
    std::uint64_t seed = s.cfg.seed;
    try {
        k = request.value("k", k);
        seed = request.value("seed", seed);
        if (request.contains("max_changed")) {
            const auto m = request["max_changed"].get<std::size_t>();
            if (m > c.max_changed) throw ConfigError("max_changed may only tighten the default of " + std::to_string(c.max_changed));
            c.max_changed = m;
        }
        if (request.contains("actionable")) {
            std::set<std::string> chosen;
            for (const auto& n : request["actionable"].get<std::vector<std::string>>()) {
                known(n);
                if (!defaults.count(n)) throw ConfigError("feature '" + n + "' is not actionable");
                chosen.insert(n);
            }
            c.actionable = chosen;
        }
        if (request.contains("frozen")) {
            for (const auto& n : request["frozen"].get<std::vector<std::string>>()) {
                known(n);
                c.frozen.insert(n);
                c.actionable.erase(n);
            }
        }
        if (request.contains("ranges")) {
            for (const auto& [name, v] : request["ranges"].items()) {
                known(name);
                const auto& spec = s.schema.at(name);
                if (spec.is_categorical()) throw ConfigError("ranges apply to numeric features only ('" + name + "')");
                double lo = v.at(0).get<double>(), hi = v.at(1).get<double>();
                if (lo > hi) throw ConfigError("range for '" + name + "' has lo > hi");
                if (lo < spec.lo || hi > spec.hi) throw ConfigError("range for '" + name + "' widens its valid range");
                if (spec.engineered) {
                    const auto& st = s.stats.at(cohort, name);
                    if (st.sigma > 0) {
                        lo = std::max(-kZGridBound, zscore(lo, st));
                        hi = std::min(kZGridBound, zscore(hi, st));
                    } else {
                        lo = -kZGridBound;
                        hi = kZGridBound;
                    }
                    if (lo > hi) throw ConfigError("range for '" + name + "' lies outside the searchable band");
                }
                c.ranges[name] = {lo, hi};
            }
        }
        if (request.contains("monotone")) {
            auto parsed = CfConstraints::from_json(json{{"monotone", request["monotone"]}});
            for (const auto& [name, m] : parsed.monotone) {
                known(name);
                c.monotone[name] = m;
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed what-if request: ") + e.what());
    }
    if (k < 1 || k > 10) throw ConfigError("k must be between 1 and 10");

    const MarginFn margin = [&s](std::span<const double> x) { return s.prescriptive.margin_features(x); };
    auto cfs = generate_counterfactuals(margin, row, k, c, space, s.cfg.cf_weights, s.cfg.ga,
                                        derive_seed(seed, {60, fnv1a(learner_id)}));
    cfs = filter_feasible(cfs, c);
    if (cfs.empty()) throw NoFeasiblePathway("no feasible pathway survives the constraint filter", std::nullopt);

    json pathways = json::array();
    for (std::size_t i = 0; i < cfs.size(); ++i) {
        json raw = json::array();
        for (const auto& d : denormalize_cf(cfs[i], cohort, s.stats, s.schema)) raw.push_back(raw_delta_to_json(d));
        pathways.push_back({{"pf", "PF" + std::to_string(i + 1)},
                            {"prob_after", cfs[i].prob_after},
                            {"deltas", raw},
                            {"counterfactual", counterfactual_to_json(cfs[i])}});
    }
    const CfFormatter fmt = [&](std::size_t j, double v) {
        return display_value(s.schema.at(space[j].name), v, cohort, s.stats);
    };
    // Actual column: the recorded raw value rather than its back-transformed z-score.
    auto table = cf_table(row, cfs, space, fmt);
    std::size_t t = 0;
    for (std::size_t j = 0; j < space.size() && t < table.rows.size(); ++j) {
        if (table.rows[t][0] != space[j].name) continue;
        const auto& spec = s.schema.at(space[j].name);
        table.rows[t][0] = spec.display_name.empty() ? spec.name : spec.display_name;
        table.rows[t][1] = s.raw_display(r, space[j].name);
        ++t;
    }
    return json{{"learner_id", learner_id},
                {"seed", seed},
                {"model_version", s.version},
                {"completion_probability_before", s.prescriptive.proba_features(row)},
                {"constraints", c.to_json()},
                {"pathways", pathways},
                {"table", table.to_json()}};
}

json feedback_json(const Snapshot& s, const std::string& learner_id, const json& pathway, int pf_index,
                   const LlmConfig& llm) {
    const auto r = s.row_of(learner_id);
    std::vector<RawDelta> deltas;
    try {
        for (const auto& d : pathway.at("deltas")) deltas.push_back(raw_delta_from_json(d));
    } catch (const json::exception& e) {
        throw FeedbackError(std::string("pathway has no usable deltas: ") + e.what());
    }
    StudentFacts facts;
    facts.programme = s.programme_display(r);
    facts.completion_likelihood = percent_text(s.prescriptive.proba_features(s.presc_frame.values.row(r)));
    for (const auto& name : s.prescriptive_features) {
        const auto& spec = s.schema.at(name);
        if (!spec.prescriptive_feedback) continue;
        facts.current.push_back({name, spec.display_name.empty() ? name : spec.display_name, s.raw_display(r, name)});
    }
    const std::string after = pathway.contains("prob_after") ? percent_text(pathway["prob_after"].get<double>()) : "";
    const auto status = build_prompt_payload(PromptPart::status, facts, {}, s.schema);
    const auto remedial = build_prompt_payload(PromptPart::remedial, facts, deltas, s.schema, after);
    const auto status_text = generate_feedback_text(status, llm);
    const auto remedial_text = generate_feedback_text(remedial, llm);
    return json{{"learner_id", learner_id},
                {"pf_index", pf_index},
                {"provenance", remedial_text.provenance},
                {"deltas", pathway.at("deltas")},
                {"status", {{"payload", status.to_json()}, {"prompt", render_prompt(status)}, {"text", status_text.text}}},
                {"remedial",
                 {{"payload", remedial.to_json()}, {"prompt", render_prompt(remedial)}, {"text", remedial_text.text}}}};
}

json cmd_explain_global(const Config& cfg, const RunPaths& paths) {
    const auto snap = load_snapshot(paths, cfg);
    const auto& s = *snap;
    const std::size_t n = std::min(cfg.global_rows, s.pred_frame.values.rows);
    std::vector<std::size_t> rows(s.pred_frame.values.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    Rng rng(derive_seed(cfg.seed, {30}));
    for (std::size_t i = 0; i < n; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
    rows.resize(n);
    std::sort(rows.begin(), rows.end());

    const MarginFn margin = [&s](std::span<const double> x) { return s.predictive.margin_features(x); };
    std::vector<Attribution> attrs(n);
    parallel_for(n, [&](std::size_t i) {
        attrs[i] = kernel_shap(margin, s.pred_frame.values.row(rows[i]), s.shap_background, s.predictive_features,
                               cfg.kernel_samples, derive_seed(cfg.seed, {31, rows[i]}));
    });
    json importance = json::array();
    for (const auto& imp : global_importance(attrs)) {
        importance.push_back({{"feature", imp.feature}, {"mean_abs_phi", imp.mean_abs_phi}});
    }
    json points = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json raw = json::object();
        for (const auto& f : s.predictive_features) raw[f] = s.raw_display(rows[i], f);
        points.push_back({{"learner_id", s.raw.records[rows[i]].learner_id},
                          {"academic_year", s.raw.records[rows[i]].academic_year},
                          {"attribution", attribution_to_json(attrs[i])},
                          {"raw_values", raw}});
    }
    json doc{{"model_version", s.version}, {"target_space", "log_odds"}, {"importance", importance}, {"rows", points}};
    write_artifact(paths, "explain_global.json", doc.dump(2) + "\n");
    record_command(paths, "explain-global", cfg, {{"rows", n}});
    return doc;
}

json cmd_explain_local(const Config& cfg, const RunPaths& paths, const std::string& learner_id) {
    const auto snap = load_snapshot(paths, cfg);
    auto doc = explanation_json(*snap, learner_id);
    write_artifact(paths, "explain_" + safe_name(learner_id) + ".json", doc.dump(2) + "\n");
    record_command(paths, "explain-local", cfg, {{"student", learner_id}});
    return doc;
}

json cmd_cf(const Config& cfg, const RunPaths& paths, const std::string& learner_id, std::size_t k,
            std::size_t max_changed) {
    Config local = cfg;
    local.cf_k = k;
    local.max_changed = max_changed;
    const auto snap = load_snapshot(paths, local);
    auto doc = whatif_json(*snap, learner_id, json{{"k", k}, {"seed", cfg.seed}});
    const auto base = "cf_" + safe_name(learner_id);
    write_artifact(paths, base + ".json", doc.dump(2) + "\n");
    CfTable t;
    t.columns = doc["table"]["columns"].get<std::vector<std::string>>();
    t.rows = doc["table"]["rows"].get<std::vector<std::vector<std::string>>>();
    write_artifact(paths, base + ".csv", t.to_csv());
    record_command(paths, "cf", local, {{"student", learner_id}, {"k", k}, {"max_changed", max_changed}});
    return doc;
}

json cmd_feedback(const Config& cfg, const RunPaths& paths, const std::string& learner_id, int pf) {
    const auto cf_path = paths.file("cf_" + safe_name(learner_id) + ".json");
    require(cf_path, "cf --student " + learner_id);
    const auto cf_doc = read_json(cf_path);
    const auto& pathways = cf_doc.at("pathways");
    if (pf < 1 || static_cast<std::size_t>(pf) > pathways.size()) {
        throw ConfigError("PF" + std::to_string(pf) + " is not among the " + std::to_string(pathways.size()) +
                          " stored pathways");
    }
    const auto snap = load_snapshot(paths, cfg);
    auto doc = feedback_json(*snap, learner_id, pathways.at(static_cast<std::size_t>(pf - 1)), pf,
                             LlmConfig::from_env(cfg.llm));
    const auto base = "feedback_" + safe_name(learner_id) + "_pf" + std::to_string(pf);
    write_artifact(paths, base + ".json", doc.dump(2) + "\n");
    write_artifact(paths, base + "_prompt_status.txt", doc["status"]["prompt"].get<std::string>());
    write_artifact(paths, base + "_prompt_remedial.txt", doc["remedial"]["prompt"].get<std::string>());
    write_artifact(paths, base + ".md",
                   doc["status"]["text"].get<std::string>() + "\n" + doc["remedial"]["text"].get<std::string>());
    record_command(paths, "feedback", cfg, {{"student", learner_id}, {"pf", pf}});
    return doc;
}

}  // namespace prescriptive
