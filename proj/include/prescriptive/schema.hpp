#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace prescriptive {

enum class FeatureKind { numeric, categorical };

// Display/rounding family used when engineered values are rendered back in raw units.
enum class Unit { none, grade, percent, count, credits, years };

inline constexpr std::string_view kMissingCategory = "__missing__";

struct FeatureSpec {
    std::string name;
    std::string display_name;
    FeatureKind kind = FeatureKind::numeric;
    bool predictive = false;
    bool prescriptive_model = false;     // used by the prescriptive model (implied by prescriptive_feedback)
    bool prescriptive_feedback = false;  // may appear in feedback; actionable when also mutable
    bool is_mutable = false;
    bool engineered = false;             // stored raw, modelled as a cohort z-score
    double lo = 0.0;                     // valid range in raw units (numeric only)
    double hi = 0.0;
    std::vector<std::string> categories;      // ordered; index defines the binary code
    std::vector<std::string> category_labels;  // optional display labels, same length
    Unit unit = Unit::none;
    double step = 0.0;  // counterfactual grid step in model units; 0 = kind default

    bool is_categorical() const { return kind == FeatureKind::categorical; }
    std::optional<std::size_t> category_index(std::string_view label) const;
    std::string category_display(std::size_t index) const;
};

struct FeatureSchema {
    std::string version = "1";
    std::vector<FeatureSpec> features;

    // Throws SchemaError on any broken invariant.
    void validate() const;

    std::optional<std::size_t> index_of(std::string_view name) const;
    const FeatureSpec& at(std::string_view name) const;

    std::vector<std::string> names() const;
    std::vector<std::string> predictive_names() const;
    std::vector<std::string> prescriptive_names() const;
    std::vector<std::string> actionable_names() const;  // feedback-eligible and mutable
};

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Unit unit);
Unit unit_from_string(std::string_view s);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& doc);
FeatureSchema load_schema(const std::string& path);
void save_schema(const FeatureSchema& schema, const std::string& path);

// Learner features of the institutional table (categories, flags, ranges), with
// synthetic-friendly ranges. Cohorts are keyed on programme_title + academic_year.
FeatureSchema default_schema();

}  // namespace prescriptive
