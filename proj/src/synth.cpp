#include "prescriptive/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prescriptive/errors.hpp"
#include "prescriptive/features.hpp"
#include "prescriptive/random.hpp"

namespace prescriptive {

using nlohmann::json;

GeneratorConfig GeneratorConfig::defaults() {
    GeneratorConfig c;
    auto& n = c.numeric;
    //                                 mean    sd   shift  cohort loading missing per_year
    n["age"] = {24, 7, -1.5, 0, 0, 0, 1};
    n["grade_mark_mean"] = {55, 12, 12, 4, 5, 0.02, 0};
    n["grade_mark_max"] = {70, 12, 10, 4, 4, 0.02, 0};
    n["grade_mark_deviation"] = {0, 12, 8, 0, 4, 0.02, 0};
    n["papers_failed"] = {1.6, 1.3, -1.2, 0, -0.4, 0, 0};
    n["passed_assessment_count"] = {18, 7, 6, 2, 2, 0.03, 0};
    n["qualification_percent_completed"] = {12, 8, 10, 2, 2, 0, 22};
    n["submitted_assignment_mark"] = {60, 13, 10, 4, 4, 0.03, 0};
    n["papers_withdrawn"] = {0.9, 1.0, -0.6, 0, -0.2, 0, 0};
    n["pages_viewed_count"] = {700, 300, 200, 80, 60, 0.03, 0};
    n["quiz_taken_count"] = {20, 10, 6, 3, 2, 0.03, 0};
    n["forum_post_created_count"] = {6, 4, 0.5, 1, 0.5, 0.03, 0};
    n["forum_post_read_count"] = {120, 70, -10, 20, 10, 0.03, 0};
    n["on_time_submission_count"] = {14, 6, 5, 2, 2, 0.03, 0};

    auto& k = c.categorical;
    k["basis_for_admission"] = {{0.35, 0.25, 0.15, 0.08, 0.12, 0.05}, {0.30, 0.20, 0.22, 0.12, 0.10, 0.06}};
    k["has_previous_tertiary_study"] = {{0.6, 0.4}, {0.72, 0.28}};
    k["highest_school_qualification"] = {{0.5, 0.08, 0.12, 0.2, 0.1}, {0.4, 0.04, 0.08, 0.2, 0.28}};
    k["full_time_status"] = {{0.3, 0.7}, {0.62, 0.38}};
    k["student_mode"] = {{0.55, 0.45}, {0.45, 0.55}};
    k["prior_activity"] = {{0.35, 0.3, 0.2, 0.05, 0.07, 0.03}, {0.3, 0.15, 0.28, 0.12, 0.1, 0.05}};
    k["gender"] = {{0.58, 0.4, 0.02}, {0.5, 0.48, 0.02}};
    k["programme_title"] = {{0.08, 0.12, 0.25, 0.25, 0.2, 0.1}, {0.12, 0.14, 0.2, 0.2, 0.16, 0.18}};

    c.credits_by_programme = {{"certificate_arts", 60},   {"diploma_business", 120},
                              {"bachelor_arts", 360},     {"bachelor_science", 360},
                              {"bachelor_business", 360}, {"bachelor_engineering_honours", 480}};
    return c;
}

void GeneratorConfig::validate() const {
    if (!(prevalence > 0.0 && prevalence < 1.0)) {
        throw ConfigError("prevalence must lie strictly between 0 and 1");
    }
    if (n_rows < 2) throw ConfigError("n_rows must be at least 2");
    if (first_year > last_year) throw ConfigError("first_year after last_year");
    if (min_years_completed < 1 || min_years_completed > max_years_completed || min_years_non_completed < 1 ||
        min_years_non_completed > max_years_non_completed) {
        throw ConfigError("invalid per-learner year counts");
    }
    schema.validate();
    for (const auto& [name, g] : numeric) {
        const auto& spec = schema.at(name);
        if (spec.kind != FeatureKind::numeric) throw ConfigError("numeric generator for categorical '" + name + "'");
        if (g.sd < 0 || g.cohort_sd < 0 || g.missing_rate < 0 || g.missing_rate >= 1) {
            throw ConfigError("invalid generator parameters for '" + name + "'");
        }
    }
    for (const auto& [name, g] : categorical) {
        const auto& spec = schema.at(name);
        if (g.weights_completed.size() != spec.categories.size() ||
            g.weights_non_completed.size() != spec.categories.size()) {
            throw ConfigError("category weights for '" + name + "' do not match the schema");
        }
    }
}

json generator_config_to_json(const GeneratorConfig& c) {
    json j;
    j["n_rows"] = c.n_rows;
    j["prevalence"] = c.prevalence;
    j["first_year"] = c.first_year;
    j["last_year"] = c.last_year;
    j["years_completed"] = {c.min_years_completed, c.max_years_completed};
    j["years_non_completed"] = {c.min_years_non_completed, c.max_years_non_completed};
    j["signal"] = c.signal;
    for (const auto& [name, g] : c.numeric) {
        j["numeric"][name] = {{"mean", g.mean},           {"sd", g.sd},
                              {"shift", g.shift},         {"cohort_sd", g.cohort_sd},
                              {"learner_loading", g.learner_loading}, {"missing_rate", g.missing_rate},
                              {"per_year", g.per_year}};
    }
    for (const auto& [name, g] : c.categorical) {
        j["categorical"][name] = {{"completed", g.weights_completed}, {"non_completed", g.weights_non_completed}};
    }
    j["credits_by_programme"] = c.credits_by_programme;
    return j;
}

GeneratorConfig generator_config_from_json(const json& doc) {
    GeneratorConfig c = GeneratorConfig::defaults();
    try {
        c.n_rows = doc.value("n_rows", c.n_rows);
        c.prevalence = doc.value("prevalence", c.prevalence);
        c.first_year = doc.value("first_year", c.first_year);
        c.last_year = doc.value("last_year", c.last_year);
        if (doc.contains("years_completed")) {
            c.min_years_completed = doc["years_completed"][0];
            c.max_years_completed = doc["years_completed"][1];
        }
        if (doc.contains("years_non_completed")) {
            c.min_years_non_completed = doc["years_non_completed"][0];
            c.max_years_non_completed = doc["years_non_completed"][1];
        }
        c.signal = doc.value("signal", c.signal);
        if (doc.contains("numeric")) {
            for (const auto& [name, g] : doc["numeric"].items()) {
                auto& t = c.numeric[name];
                t.mean = g.value("mean", t.mean);
                t.sd = g.value("sd", t.sd);
                t.shift = g.value("shift", t.shift);
                t.cohort_sd = g.value("cohort_sd", t.cohort_sd);
                t.learner_loading = g.value("learner_loading", t.learner_loading);
                t.missing_rate = g.value("missing_rate", t.missing_rate);
                t.per_year = g.value("per_year", t.per_year);
            }
        }
        if (doc.contains("categorical")) {
            for (const auto& [name, g] : doc["categorical"].items()) {
                auto& t = c.categorical[name];
                t.weights_completed = g.at("completed").get<std::vector<double>>();
                t.weights_non_completed = g.at("non_completed").get<std::vector<double>>();
            }
        }
        if (doc.contains("credits_by_programme")) {
            c.credits_by_programme = doc["credits_by_programme"].get<std::map<std::string, double>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed generator config: ") + e.what());
    }
    return c;
}

namespace {

struct LearnerPlan {
    bool completed = false;
    int years = 1;
};

}  // namespace

Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
    config.validate();
    const auto& schema = config.schema;
    Rng rng(derive_seed(seed, {0x73796e7468ULL}));

    // Learner plans: fill each class's row budget exactly, trimming the final learner.
    const auto pos_rows = static_cast<std::size_t>(std::llround(config.prevalence * static_cast<double>(config.n_rows)));
    const std::size_t neg_rows = config.n_rows - pos_rows;
    std::vector<LearnerPlan> plans;
    auto fill = [&](bool completed, std::size_t budget, int lo, int hi) {
        std::size_t used = 0;
        while (used < budget) {
            int years = lo + static_cast<int>(rng.below(static_cast<std::size_t>(hi - lo + 1)));
            years = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(years), budget - used));
            plans.push_back({completed, years});
            used += static_cast<std::size_t>(years);
        }
    };
    fill(true, pos_rows, config.min_years_completed, config.max_years_completed);
    fill(false, neg_rows, config.min_years_non_completed, config.max_years_non_completed);
    rng.shuffle(plans);

    const int span_years = config.last_year - config.first_year + 1;

    // Cohort offsets, drawn lazily in a fixed (programme, year, feature) order.
    const auto programme_idx = schema.index_of(config.programme_feature);
    std::map<std::string, double> cohort_offset;
    auto offset_for = [&](const std::string& cohort, const std::string& feature, double sd) {
        if (sd <= 0.0) return 0.0;
        auto key = cohort + "|" + feature;
        auto it = cohort_offset.find(key);
        if (it != cohort_offset.end()) return it->second;
        Rng local(derive_seed(seed, {fnv1a(key)}));
        const double v = local.normal(0.0, sd);
        cohort_offset.emplace(key, v);
        return v;
    };

    Dataset d;
    d.schema = schema;
    d.provenance = {"synthetic:seed=" + std::to_string(seed), schema.version};
    d.records.reserve(config.n_rows);

    for (std::size_t l = 0; l < plans.size(); ++l) {
        const auto& plan = plans[l];
        char id[32];
        std::snprintf(id, sizeof(id), "L%06zu", l + 1);
        const double latent = rng.normal();
        const int start_max = std::max(0, span_years - plan.years);
        const int start = config.first_year + static_cast<int>(rng.below(static_cast<std::size_t>(start_max + 1)));

        // Learner-level categoricals are drawn once; the rest could vary by year but are kept stable.
        std::vector<Cell> fixed(schema.features.size());
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            const auto& spec = schema.features[f];
            if (spec.kind != FeatureKind::categorical) continue;
            auto it = config.categorical.find(spec.name);
            std::size_t ci = 0;
            if (it != config.categorical.end()) {
                ci = rng.categorical(plan.completed ? it->second.weights_completed : it->second.weights_non_completed);
            } else {
                ci = rng.below(spec.categories.size());
                if (spec.categories[ci] == kMissingCategory) ci = 0;
            }
            const auto& label = spec.categories[ci];
            if (label == kMissingCategory) fixed[f] = std::monostate{};
            else fixed[f] = label;
        }
        std::string programme;
        if (programme_idx) {
            if (const auto* s = std::get_if<std::string>(&fixed[*programme_idx])) programme = *s;
        }

        for (int y = 0; y < plan.years; ++y) {
            LearnerRecord rec;
            rec.learner_id = id;
            rec.academic_year = start + y;
            rec.outcome = plan.completed ? Outcome::completed : Outcome::non_completed;
            rec.values = fixed;
            const std::string cohort = programme + "/" + std::to_string(rec.academic_year);
            for (std::size_t f = 0; f < schema.features.size(); ++f) {
                const auto& spec = schema.features[f];
                if (spec.kind != FeatureKind::numeric) continue;
                if (spec.name == config.credits_feature && !config.credits_by_programme.empty()) {
                    auto it = config.credits_by_programme.find(programme);
                    rec.values[f] = it != config.credits_by_programme.end() ? it->second : spec.lo;
                    continue;
                }
                auto it = config.numeric.find(spec.name);
                NumericGenerator g;
                if (it != config.numeric.end()) g = it->second;
                else g = {(spec.lo + spec.hi) / 2, (spec.hi - spec.lo) / 6, 0, 0, 0, 0, 0};
                // Draw order is fixed so missingness does not shift later draws.
                const double noise = rng.normal();
                const bool missing = rng.uniform() < g.missing_rate;
                double v = g.mean + g.per_year * y + (plan.completed ? config.signal * g.shift : 0.0) +
                           offset_for(cohort, spec.name, g.cohort_sd) + g.learner_loading * latent + g.sd * noise;
                v = std::clamp(round_raw(std::clamp(v, spec.lo, spec.hi), spec.unit), spec.lo, spec.hi);
                if (missing) rec.values[f] = std::monostate{};
                else rec.values[f] = v;
            }
            d.records.push_back(std::move(rec));
        }
    }
    return d;
}

}  // namespace prescriptive
