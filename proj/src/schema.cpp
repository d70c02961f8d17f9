#include "prescriptive/schema.hpp"

#include <set>

#include "prescriptive/errors.hpp"
#include "prescriptive/util.hpp"

namespace prescriptive {

using nlohmann::json;

std::optional<std::size_t> FeatureSpec::category_index(std::string_view label) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] == label) return i;
    }
    return std::nullopt;
}

std::string FeatureSpec::category_display(std::size_t index) const {
    if (index < category_labels.size()) return category_labels[index];
    if (index < categories.size()) return categories[index];
    throw EncodingError("category index " + std::to_string(index) + " out of range for " + name);
}

void FeatureSchema::validate() const {
    if (features.empty()) throw SchemaError("schema has no features");
    std::set<std::string> seen;
    for (const auto& f : features) {
        if (f.name.empty()) throw SchemaError("feature with empty name");
        if (!seen.insert(f.name).second) throw SchemaError("duplicate feature '" + f.name + "'");
        if (f.prescriptive_feedback && !f.prescriptive_model) {
            throw SchemaError("feature '" + f.name +
                              "' is used for prescriptive feedback but not for the prescriptive model");
        }
        if (f.kind == FeatureKind::numeric) {
            if (!(f.lo <= f.hi)) throw SchemaError("feature '" + f.name + "' has range lo > hi");
            if (f.step < 0.0) throw SchemaError("feature '" + f.name + "' has negative step");
        } else {
            if (f.categories.empty()) throw SchemaError("feature '" + f.name + "' has no categories");
            std::set<std::string> cats(f.categories.begin(), f.categories.end());
            if (cats.size() != f.categories.size()) {
                throw SchemaError("feature '" + f.name + "' has duplicate categories");
            }
            if (!f.category_labels.empty() && f.category_labels.size() != f.categories.size()) {
                throw SchemaError("feature '" + f.name + "' has mismatched category labels");
            }
            if (f.engineered) throw SchemaError("categorical feature '" + f.name + "' cannot be engineered");
        }
    }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].name == name) return i;
    }
    return std::nullopt;
}

const FeatureSpec& FeatureSchema::at(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw SchemaError("unknown feature '" + std::string(name) + "'");
    return features[*idx];
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> out;
    for (const auto& f : features) out.push_back(f.name);
    return out;
}

std::vector<std::string> FeatureSchema::predictive_names() const {
    std::vector<std::string> out;
    for (const auto& f : features)
        if (f.predictive) out.push_back(f.name);
    return out;
}

std::vector<std::string> FeatureSchema::prescriptive_names() const {
    std::vector<std::string> out;
    for (const auto& f : features)
        if (f.prescriptive_model) out.push_back(f.name);
    return out;
}

std::vector<std::string> FeatureSchema::actionable_names() const {
    std::vector<std::string> out;
    for (const auto& f : features)
        if (f.prescriptive_feedback && f.is_mutable) out.push_back(f.name);
    return out;
}

std::string_view to_string(FeatureKind kind) {
    return kind == FeatureKind::numeric ? "numeric" : "categorical";
}

std::string_view to_string(Unit unit) {
    switch (unit) {
        case Unit::grade: return "grade";
        case Unit::percent: return "percent";
        case Unit::count: return "count";
        case Unit::credits: return "credits";
        case Unit::years: return "years";
        case Unit::none: break;
    }
    return "none";
}

Unit unit_from_string(std::string_view s) {
    if (s == "grade") return Unit::grade;
    if (s == "percent") return Unit::percent;
    if (s == "count") return Unit::count;
    if (s == "credits") return Unit::credits;
    if (s == "years") return Unit::years;
    if (s == "none" || s.empty()) return Unit::none;
    throw SchemaError("unknown unit '" + std::string(s) + "'");
}

json schema_to_json(const FeatureSchema& schema) {
    json features = json::array();
    for (const auto& f : schema.features) {
        json j;
        j["name"] = f.name;
        if (!f.display_name.empty()) j["display_name"] = f.display_name;
        j["kind"] = to_string(f.kind);
        j["predictive"] = f.predictive;
        j["prescriptive_model"] = f.prescriptive_model;
        j["prescriptive_feedback"] = f.prescriptive_feedback;
        j["mutable"] = f.is_mutable;
        j["engineered"] = f.engineered;
        if (f.kind == FeatureKind::numeric) {
            j["range"] = {f.lo, f.hi};
            j["unit"] = to_string(f.unit);
            if (f.step > 0.0) j["step"] = f.step;
        } else {
            j["categories"] = f.categories;
            if (!f.category_labels.empty()) j["category_labels"] = f.category_labels;
        }
        features.push_back(std::move(j));
    }
    return json{{"version", schema.version}, {"features", features}};
}

FeatureSchema schema_from_json(const json& doc) {
    FeatureSchema schema;
    try {
        if (doc.contains("version")) {
            schema.version = doc["version"].is_string() ? doc["version"].get<std::string>()
                                                        : doc["version"].dump();
        }
        for (const auto& j : doc.at("features")) {
            FeatureSpec f;
            f.name = j.at("name").get<std::string>();
            f.display_name = j.value("display_name", std::string{});
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "numeric") f.kind = FeatureKind::numeric;
            else if (kind == "categorical") f.kind = FeatureKind::categorical;
            else throw SchemaError("feature '" + f.name + "' has unknown kind '" + kind + "'");
            f.predictive = j.value("predictive", false);
            f.prescriptive_model = j.value("prescriptive_model", false);
            f.prescriptive_feedback = j.value("prescriptive_feedback", false);
            f.is_mutable = j.value("mutable", false);
            f.engineered = j.value("engineered", false);
            if (j.contains("range")) {
                const auto& r = j["range"];
                if (!r.is_array() || r.size() != 2) throw SchemaError("feature '" + f.name + "' range needs two numbers");
                f.lo = r[0].get<double>();
                f.hi = r[1].get<double>();
            } else if (f.kind == FeatureKind::numeric) {
                throw SchemaError("numeric feature '" + f.name + "' has no range");
            }
            if (j.contains("categories")) f.categories = j["categories"].get<std::vector<std::string>>();
            if (j.contains("category_labels")) f.category_labels = j["category_labels"].get<std::vector<std::string>>();
            f.unit = unit_from_string(j.value("unit", std::string{"none"}));
            f.step = j.value("step", 0.0);
            schema.features.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed schema manifest: ") + e.what());
    }
    schema.validate();
    return schema;
}

FeatureSchema load_schema(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError("schema manifest " + path + " does not parse: " + e.what());
    }
    return schema_from_json(doc);
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
    write_file(path, schema_to_json(schema).dump(2) + "\n");
}

namespace {

FeatureSpec categorical(std::string name, std::string display, std::vector<std::string> cats,
                        bool predictive, bool pm, bool pf, bool is_mutable,
                        std::vector<std::string> labels = {}) {
    FeatureSpec f;
    f.name = std::move(name);
    f.display_name = std::move(display);
    f.kind = FeatureKind::categorical;
    f.categories = std::move(cats);
    f.category_labels = std::move(labels);
    f.predictive = predictive;
    f.prescriptive_model = pm;
    f.prescriptive_feedback = pf;
    f.is_mutable = is_mutable;
    return f;
}

FeatureSpec numeric(std::string name, std::string display, double lo, double hi, Unit unit,
                    bool predictive, bool pm, bool pf, bool is_mutable, bool engineered, double step = 0.0) {
    FeatureSpec f;
    f.name = std::move(name);
    f.display_name = std::move(display);
    f.kind = FeatureKind::numeric;
    f.lo = lo;
    f.hi = hi;
    f.unit = unit;
    f.predictive = predictive;
    f.prescriptive_model = pm;
    f.prescriptive_feedback = pf;
    f.is_mutable = is_mutable;
    f.engineered = engineered;
    f.step = step;
    return f;
}

}  // namespace

FeatureSchema default_schema() {
    FeatureSchema s;
    s.version = "learner-table-1";
    auto& f = s.features;
    // learner characteristics
    f.push_back(categorical("basis_for_admission", "basis for admission",
                            {"nz_entrance", "ncea", "adult_admission", "discretionary_entrance", "international", "other"},
                            true, false, false, false));
    f.push_back(categorical("has_previous_tertiary_study", "previous tertiary study", {"no", "yes"},
                            true, false, false, false));
    f.push_back(categorical("highest_school_qualification", "highest school qualification",
                            {"university_entrance", "international_baccalaureate", "cambridge", "overseas", "none"},
                            true, false, false, false));
    f.push_back(categorical("full_time_status", "study load", {"part_time", "full_time"}, true, true, true, true,
                            {"part-time", "full-time"}));
    f.push_back(categorical("student_mode", "study mode", {"online", "on_campus"}, true, true, true, true,
                            {"online", "on-campus"}));
    f.push_back(categorical("prior_activity", "prior activity",
                            {"secondary_school", "university_student", "employed", "unemployed", "other",
                             std::string(kMissingCategory)},
                            true, false, false, false));
    f.push_back(numeric("age", "age", 16, 80, Unit::years, true, true, false, false, false));
    f.push_back(categorical("gender", "gender", {"female", "male", "other"}, true, false, false, false));
    // academic performance
    f.push_back(numeric("grade_mark_mean", "mean grade", 0, 100, Unit::grade, true, true, true, true, true));
    f.push_back(numeric("grade_mark_max", "maximum grade", 0, 100, Unit::grade, false, true, false, true, true));
    f.push_back(numeric("grade_mark_deviation", "grade deviation from class mean", -100, 100, Unit::grade, true,
                        true, false, true, true));
    f.push_back(numeric("papers_failed", "number of papers failed this year", 0, 8, Unit::count, true, true, true, true, false));
    f.push_back(numeric("passed_assessment_count", "number of assessments passed", 0, 60, Unit::count, false, true, false,
                        true, true));
    f.push_back(numeric("qualification_percent_completed", "share of the qualification completed", 0, 100, Unit::percent, false,
                        true, true, true, true));
    f.push_back(numeric("submitted_assignment_mark", "average assignment mark", 0, 100, Unit::grade, true, true,
                        true, true, true));
    // learner behaviour
    f.push_back(numeric("papers_withdrawn", "number of papers withdrawn this year", 0, 8, Unit::count, true, true, true, true,
                        false));
    f.push_back(numeric("pages_viewed_count", "number of learning pages viewed", 0, 5000, Unit::count, true, true, true, true,
                        true));
    f.push_back(numeric("quiz_taken_count", "number of online quizzes taken", 0, 200, Unit::count, true, true, true, true,
                        true));
    f.push_back(numeric("forum_post_created_count", "number of forum posts created", 0, 200, Unit::count, true, true, true,
                        true, true));
    f.push_back(numeric("forum_post_read_count", "number of forum posts read", 0, 2000, Unit::count, true, true, true, true,
                        true));
    f.push_back(numeric("on_time_submission_count", "number of on-time assignment submissions", 0, 60, Unit::count, true, true,
                        true, true, true));
    // programme characteristics
    f.push_back(categorical("programme_title", "programme",
                            {"certificate_arts", "diploma_business", "bachelor_arts", "bachelor_science",
                             "bachelor_business", "bachelor_engineering_honours"},
                            true, false, false, false));
    f.push_back(numeric("programme_credits", "programme credit requirement", 60, 480, Unit::credits, true, true, true,
                        true, false, 60));
    s.validate();
    return s;
}

}  // namespace prescriptive
