#include "prescriptive/llm_client.hpp"

#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

namespace prescriptive {

using nlohmann::json;

LlmMode llm_mode_from(std::string_view s) {
    if (s == "offline") return LlmMode::offline;
    if (s == "live") return LlmMode::live;
    throw ConfigError("LLM mode must be 'offline' or 'live', got '" + std::string(s) + "'");
}

LlmConfig LlmConfig::from_env(LlmConfig base) {
    if (const char* v = std::getenv("PRESCRIBE_LLM_MODE"); v && *v) base.mode = llm_mode_from(v);
    if (const char* v = std::getenv("PRESCRIBE_LLM_ENDPOINT"); v && *v) base.endpoint = v;
    if (const char* v = std::getenv("PRESCRIBE_LLM_API_KEY"); v && *v) base.api_key = v;
    if (const char* v = std::getenv("PRESCRIBE_LLM_MODEL"); v && *v) base.model = v;
    return base;
}

LlmConfig LlmConfig::from_json(const json& j) {
    LlmConfig c;
    try {
        if (j.contains("mode")) c.mode = llm_mode_from(j["mode"].get<std::string>());
        c.endpoint = j.value("endpoint", c.endpoint);
        c.model = j.value("model", c.model);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
        c.timeout_s = j.value("timeout_s", c.timeout_s);
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        c.max_chars = j.value("max_chars", c.max_chars);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed llm config: ") + e.what());
    }
    return c;
}

json LlmConfig::to_json() const {
    return json{{"mode", mode == LlmMode::live ? "live" : "offline"},
                {"endpoint", endpoint},
                {"model", model},
                {"max_retries", max_retries},
                {"backoff_ms", backoff_ms},
                {"timeout_s", timeout_s},
                {"max_tokens", max_tokens},
                {"max_chars", max_chars}};
}

namespace {

constexpr const char* kFallbackHint = " (set PRESCRIBE_LLM_MODE=offline to use the offline renderer)";

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("LLM endpoint '" + url + "' is not an http(s) URL");
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

std::string chat_completion(const LlmConfig& cfg, const std::string& prompt) {
    if (cfg.endpoint.empty()) throw LlmError(std::string("no LLM endpoint configured") + kFallbackHint);
    const auto url = split_url(cfg.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(cfg.timeout_s, 0);
    client.set_read_timeout(cfg.timeout_s, 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    const json body{{"model", cfg.model},
                    {"temperature", 0},
                    {"max_tokens", cfg.max_tokens},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    const auto payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg.backoff_ms << (attempt - 1)));
        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw LlmError("LLM endpoint rejected the credentials (HTTP " + std::to_string(res->status) + ")" +
                           kFallbackHint);
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw LlmError("LLM endpoint returned HTTP " + std::to_string(res->status) + kFallbackHint);
        }
        try {
            const auto doc = json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw LlmError(std::string("unexpected LLM response shape: ") + e.what());
        }
    }
    throw LlmError("LLM endpoint unavailable after " + std::to_string(cfg.max_retries + 1) + " attempts (" +
                   last_error + ")" + kFallbackHint);
}

GeneratedText generate_feedback_text(const PromptPayload& p, const LlmConfig& cfg) {
    if (cfg.mode == LlmMode::offline) return {render_offline(p), "offline-template"};
    auto text = chat_completion(cfg, render_prompt(p));
    validate_response(text, p, cfg.max_chars);
    return {std::move(text), "llm"};
}

}  // namespace prescriptive
