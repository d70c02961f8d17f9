#include "prescriptive/feedback.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "prescriptive/errors.hpp"

namespace prescriptive {

using nlohmann::json;

std::string_view to_string(DeltaDirection d) {
    switch (d) {
        case DeltaDirection::increase: return "increase";
        case DeltaDirection::decrease: return "decrease";
        case DeltaDirection::switch_category: break;
    }
    return "switch";
}

std::string_view to_string(PromptPart p) { return p == PromptPart::status ? "status" : "remedial"; }

namespace {

DeltaDirection direction_from(std::string_view s) {
    if (s == "increase") return DeltaDirection::increase;
    if (s == "decrease") return DeltaDirection::decrease;
    if (s == "switch") return DeltaDirection::switch_category;
    throw FeedbackError("unknown delta direction '" + std::string(s) + "'");
}

PromptPart part_from(std::string_view s) {
    if (s == "status") return PromptPart::status;
    if (s == "remedial") return PromptPart::remedial;
    throw FeedbackError("unknown prompt part '" + std::string(s) + "'");
}

std::string with_unit(double v, Unit u) { return format_raw(v, u) + unit_suffix(u); }

// Raw value for a model-space value, rounded per unit and kept inside the valid range.
double to_raw(const FeatureSpec& spec, double model_value, const std::string& cohort_key, const StatsStore& stats) {
    double raw = model_value;
    if (spec.engineered) raw = zscore_inverse(model_value, stats.at(cohort_key, spec.name));
    raw = std::clamp(raw, spec.lo, spec.hi);
    return round_raw(raw, spec.unit);
}

std::string label_of(const FeatureSpec& spec) { return spec.display_name.empty() ? spec.name : spec.display_name; }

}  // namespace

std::string display_value(const FeatureSpec& spec, double model_value, const std::string& cohort_key,
                          const StatsStore& stats) {
    if (spec.is_categorical()) {
        if (model_value < 0 || model_value >= static_cast<double>(spec.categories.size())) {
            throw EncodingError("category index out of range for '" + spec.name + "'");
        }
        return spec.category_display(static_cast<std::size_t>(model_value));
    }
    return with_unit(to_raw(spec, model_value, cohort_key, stats), spec.unit);
}

std::vector<RawDelta> denormalize_cf(const Counterfactual& cf, const std::string& cohort_key, const StatsStore& stats,
                                     const FeatureSchema& schema) {
    std::vector<RawDelta> out;
    for (const auto& d : cf.deltas) {
        const auto& spec = schema.at(d.name);
        RawDelta r;
        r.feature = spec.name;
        r.display_name = label_of(spec);
        r.unit = spec.unit;
        if (spec.is_categorical()) {
            r.from_value = d.from;
            r.to_value = d.to;
            r.direction = DeltaDirection::switch_category;
        } else {
            r.from_value = to_raw(spec, d.from, cohort_key, stats);
            r.to_value = to_raw(spec, d.to, cohort_key, stats);
            r.direction = d.to >= d.from ? DeltaDirection::increase : DeltaDirection::decrease;
        }
        r.from_text = display_value(spec, d.from, cohort_key, stats);
        r.to_text = display_value(spec, d.to, cohort_key, stats);
        out.push_back(std::move(r));
    }
    return out;
}

json raw_delta_to_json(const RawDelta& d) {
    return json{{"feature", d.feature},       {"display_name", d.display_name}, {"from_value", d.from_value},
                {"to_value", d.to_value},     {"from", d.from_text},            {"to", d.to_text},
                {"unit", to_string(d.unit)},  {"direction", to_string(d.direction)}};
}

RawDelta raw_delta_from_json(const json& j) {
    RawDelta d;
    try {
        d.feature = j.at("feature").get<std::string>();
        d.display_name = j.at("display_name").get<std::string>();
        d.from_value = j.at("from_value").get<double>();
        d.to_value = j.at("to_value").get<double>();
        d.from_text = j.at("from").get<std::string>();
        d.to_text = j.at("to").get<std::string>();
        d.unit = unit_from_string(j.at("unit").get<std::string>());
        d.direction = direction_from(j.at("direction").get<std::string>());
    } catch (const json::exception& e) {
        throw FeedbackError(std::string("malformed delta: ") + e.what());
    }
    return d;
}

json PromptPayload::to_json() const {
    return json{{"part", to_string(part)},
                {"instruction", instruction},
                {"response_template", response_template},
                {"data", data}};
}

PromptPayload PromptPayload::from_json(const json& j) {
    PromptPayload p;
    try {
        p.part = part_from(j.at("part").get<std::string>());
        p.instruction = j.at("instruction").get<std::string>();
        p.response_template = j.at("response_template").get<std::string>();
        p.data = j.at("data");
    } catch (const json::exception& e) {
        throw FeedbackError(std::string("malformed payload: ") + e.what());
    }
    return p;
}

std::vector<std::string> template_placeholders(const std::string& text) {
    static const std::regex re(R"(\{\{([A-Za-z0-9_]+)\}\})");
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        auto key = (*it)[1].str();
        if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(std::move(key));
    }
    return out;
}

namespace {

const std::set<std::string>& context_keys() {
    static const std::set<std::string> keys{"programme", "completion_likelihood", "completion_likelihood_after"};
    return keys;
}

bool key_allowed(const std::string& key, const FeatureSchema& schema) {
    if (context_keys().count(key)) return true;
    if (schema.index_of(key)) return true;
    for (std::string_view suffix : {"_from", "_to"}) {
        if (key.size() > suffix.size() && key.ends_with(suffix) &&
            schema.index_of(std::string_view(key).substr(0, key.size() - suffix.size()))) {
            return true;
        }
    }
    return false;
}

std::string text_of(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

const char* kTemplateRule =
    "Fill every {{placeholder}} in the response template with the value of the data key of the same name, copied "
    "exactly as written. Keep the response strictly to the response template: do not add sentences, numbers or "
    "claims that the template does not contain, and do not drop any line of it.";

}  // namespace

void validate_payload(const PromptPayload& p, const FeatureSchema& schema) {
    if (!p.data.is_object()) throw FeedbackError("payload data must be a JSON object");
    for (const auto& [key, value] : p.data.items()) {
        if (!key_allowed(key, schema)) throw FeedbackError("payload data key '" + key + "' is not whitelisted");
        if (value.is_object() || value.is_array()) throw FeedbackError("payload data key '" + key + "' must be flat");
    }
    for (const auto& key : template_placeholders(p.response_template)) {
        if (!p.data.contains(key)) throw FeedbackError("template placeholder {{" + key + "}} has no data key");
    }
}

PromptPayload build_prompt_payload(PromptPart part, const StudentFacts& facts, const std::vector<RawDelta>& deltas,
                                   const FeatureSchema& schema, const std::string& likelihood_after) {
    PromptPayload p;
    p.part = part;
    p.data["programme"] = facts.programme;
    std::string tpl = "You are enrolled in {{programme}}.\n";
    if (part == PromptPart::status) {
        if (facts.current.empty()) throw FeedbackError("status payload needs the learner's current values");
        for (const auto& f : facts.current) {
            p.data[f.feature] = f.text;
            tpl += "Your " + f.display_name + " is {{" + f.feature + "}}.\n";
        }
        if (!facts.completion_likelihood.empty()) {
            p.data["completion_likelihood"] = facts.completion_likelihood;
            tpl += "Your current estimated likelihood of completing the qualification is {{completion_likelihood}}.\n";
        }
        p.instruction =
            "You are helping an academic advisor write to a university learner. Write the first part of the message: "
            "a short, neutral statement of the learner's current academic status, using only the facts in the data "
            "object. Do not give advice, suggestions or next steps in this part. ";
        p.instruction += kTemplateRule;
    } else {
        if (deltas.empty()) throw FeedbackError("remedial payload needs at least one change");
        tpl = "To improve your likelihood of completing {{programme}}, these changes are recommended:\n";
        for (const auto& d : deltas) {
            p.data[d.feature + "_from"] = d.from_text;
            p.data[d.feature + "_to"] = d.to_text;
            const char* verb = d.direction == DeltaDirection::increase   ? "Increase"
                               : d.direction == DeltaDirection::decrease ? "Reduce"
                                                                         : "Change";
            tpl += std::string("- ") + verb + " your " + d.display_name + " from {{" + d.feature + "_from}} to {{" +
                   d.feature + "_to}}.\n";
        }
        if (!likelihood_after.empty()) {
            p.data["completion_likelihood_after"] = likelihood_after;
            tpl += "With these changes your estimated likelihood of completing rises to {{completion_likelihood_after}}.\n";
        }
        p.instruction =
            "You are helping an academic advisor write to a university learner. Write the second part of the "
            "message: the specific changes that would put the learner on track to complete, using only the changes "
            "in the data object. Mention no other feature. ";
        p.instruction += kTemplateRule;
    }
    p.response_template = std::move(tpl);
    validate_payload(p, schema);
    return p;
}

std::string render_prompt(const PromptPayload& p) {
    return p.instruction + "\n\nResponse template:\n" + p.response_template + "\nData (JSON):\n" + p.data.dump(2) + "\n";
}

std::string render_offline(const PromptPayload& p) {
    static const std::regex re(R"(\{\{([A-Za-z0-9_]+)\}\})");
    std::string out;
    auto last = p.response_template.cbegin();
    for (auto it = std::sregex_iterator(p.response_template.begin(), p.response_template.end(), re);
         it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        out.append(last, m[0].first);
        const auto key = m[1].str();
        if (!p.data.contains(key)) throw FeedbackError("template placeholder {{" + key + "}} has no data key");
        out += "**" + text_of(p.data[key]) + "**";
        last = m[0].second;
    }
    out.append(last, p.response_template.cend());
    return out;
}

namespace {

std::set<std::string> numbers_in(const std::string& text) {
    static const std::regex re(R"(\d+(\.\d+)?)");
    std::set<std::string> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        out.insert(it->str());
    }
    return out;
}

}  // namespace

void validate_response(const std::string& text, const PromptPayload& p, std::size_t max_chars) {
    if (text.size() > max_chars) {
        throw FeedbackValidationError("response exceeds " + std::to_string(max_chars) + " characters", text);
    }
    std::set<std::string> allowed = numbers_in(p.response_template);
    for (const auto& [key, value] : p.data.items()) {
        auto n = numbers_in(text_of(value));
        allowed.insert(n.begin(), n.end());
    }
    for (const auto& n : numbers_in(text)) {
        if (!allowed.count(n)) {
            throw FeedbackValidationError("response contains the number " + n + " which is not in the payload", text);
        }
    }
    for (const auto& key : template_placeholders(p.response_template)) {
        const auto value = text_of(p.data.at(key));
        if (text.find(value) == std::string::npos) {
            throw FeedbackValidationError("response does not contain the value '" + value + "' for {{" + key + "}}",
                                          text);
        }
    }
}

const std::vector<std::string>& recommendation_verbs() {
    static const std::vector<std::string> verbs{"should", "must",   "recommend", "recommended", "suggest",
                                                "consider", "increase", "reduce", "decrease",    "improve",
                                                "switch", "change", "try",      "aim"};
    return verbs;
}

}  // namespace prescriptive
