#pragma once

#include <string>

#include "json.hpp"

#include "prescriptive/errors.hpp"
#include "prescriptive/feedback.hpp"

namespace prescriptive {

enum class LlmMode { offline, live };

struct LlmConfig {
    LlmMode mode = LlmMode::offline;
    std::string endpoint;  // full URL of a chat-completions route
    std::string api_key;
    std::string model = "gpt-3.5-turbo";
    int max_retries = 3;
    int backoff_ms = 250;
    int timeout_s = 30;
    int max_tokens = 600;
    std::size_t max_chars = 4000;

    // Reads PRESCRIBE_LLM_MODE, PRESCRIBE_LLM_ENDPOINT, PRESCRIBE_LLM_API_KEY and
    // PRESCRIBE_LLM_MODEL over the given base.
    static LlmConfig from_env(LlmConfig base);
    static LlmConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;  // never includes the key
};

LlmMode llm_mode_from(std::string_view s);

struct LlmError : Error {
    using Error::Error;
};

struct GeneratedText {
    std::string text;
    std::string provenance;  // "llm" or "offline-template"
};

// Sends one chat-completion request (temperature 0) and returns the message content.
std::string chat_completion(const LlmConfig& cfg, const std::string& prompt);

// Live: request + validate_response. Offline: render_offline.
GeneratedText generate_feedback_text(const PromptPayload& p, const LlmConfig& cfg);

}  // namespace prescriptive
