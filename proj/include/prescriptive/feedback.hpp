#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "prescriptive/counterfactual.hpp"
#include "prescriptive/features.hpp"
#include "prescriptive/schema.hpp"

namespace prescriptive {

enum class DeltaDirection { increase, decrease, switch_category };

std::string_view to_string(DeltaDirection d);

struct RawDelta {
    std::string feature;
    std::string display_name;
    double from_value = 0.0;  // raw units (category index for categoricals)
    double to_value = 0.0;
    std::string from_text;  // rounded, with unit suffix or category label
    std::string to_text;
    Unit unit = Unit::none;
    DeltaDirection direction = DeltaDirection::increase;
    bool operator==(const RawDelta&) const = default;
};

// Engineered values go back through the learner's cohort stats; others pass
// through with category labels. Throws StatsError when a cohort entry is missing.
std::vector<RawDelta> denormalize_cf(const Counterfactual& cf, const std::string& cohort_key, const StatsStore& stats,
                                     const FeatureSchema& schema);

// Model-space value of one feature rendered in raw units ("66.0%", "part-time").
std::string display_value(const FeatureSpec& spec, double model_value, const std::string& cohort_key,
                          const StatsStore& stats);

nlohmann::json raw_delta_to_json(const RawDelta& d);
RawDelta raw_delta_from_json(const nlohmann::json& j);

struct FactValue {
    std::string feature;
    std::string display_name;
    std::string text;
};

struct StudentFacts {
    std::string programme;
    std::string completion_likelihood;  // e.g. "10%"
    std::vector<FactValue> current;
};

enum class PromptPart { status, remedial };

std::string_view to_string(PromptPart p);

struct PromptPayload {
    PromptPart part = PromptPart::status;
    std::string instruction;
    std::string response_template;  // {{key}} placeholders
    nlohmann::json data = nlohmann::json::object();

    nlohmann::json to_json() const;
    static PromptPayload from_json(const nlohmann::json& j);
    bool operator==(const PromptPayload&) const = default;
};

std::vector<std::string> template_placeholders(const std::string& text);

// Keys the data object may carry: fixed context keys plus <feature>, <feature>_from
// and <feature>_to for schema features. Placeholders must all name data keys.
void validate_payload(const PromptPayload& p, const FeatureSchema& schema);

PromptPayload build_prompt_payload(PromptPart part, const StudentFacts& facts, const std::vector<RawDelta>& deltas,
                                   const FeatureSchema& schema, const std::string& likelihood_after = {});

// Instruction, template and data in fixed order.
std::string render_prompt(const PromptPayload& p);

// Deterministic template substitution; values appear in bold.
std::string render_offline(const PromptPayload& p);

struct FeedbackValidationError : Error {
    FeedbackValidationError(const std::string& what, std::string raw) : Error(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

// Rejects numbers that appear in neither the data nor the template, missing
// placeholder values, and text beyond max_chars.
void validate_response(const std::string& text, const PromptPayload& p, std::size_t max_chars = 4000);

// Words that make a sentence advice rather than a statement of status.
const std::vector<std::string>& recommendation_verbs();

}  // namespace prescriptive
