#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "student_b.hpp"

#include "prescriptive/errors.hpp"
#include "prescriptive/feedback.hpp"
#include "prescriptive/llm_client.hpp"
#include "prescriptive/util.hpp"

using namespace prescriptive;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return read_file(std::string(FIXTURE_DIR) + "/" + name); }

std::string strip_bold(std::string s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.compare(i, 2, "**") == 0) {
            ++i;
            continue;
        }
        out += s[i];
    }
    return out;
}

PromptPayload status_payload() {
    return build_prompt_payload(PromptPart::status, student_b::facts(), {}, default_schema());
}

PromptPayload remedial_payload() {
    const auto deltas = denormalize_cf(student_b::remedial_pathway(), student_b::kCohort, student_b::stats(),
                                       default_schema());
    return build_prompt_payload(PromptPart::remedial, student_b::facts(), deltas, default_schema(),
                                percent_text(student_b::remedial_pathway().prob_after));
}

// Minimal chat-completions stand-in on a loopback port.
class StubServer {
public:
    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

void reply(httplib::Response& res, const std::string& content) {
    res.set_content(json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump(),
                    "application/json");
}

LlmConfig live_config(const std::string& url) {
    LlmConfig c;
    c.mode = LlmMode::live;
    c.endpoint = url;
    c.api_key = "test-key";
    c.backoff_ms = 1;
    c.timeout_s = 5;
    return c;
}

}  // namespace

TEST_CASE("denormalisation renders cohort values in raw units") {
    const auto schema = default_schema();
    const auto st = student_b::stats();
    CHECK(display_value(schema.at("grade_mark_mean"), 0.0, student_b::kCohort, st) == "61.2%");
    CHECK(display_value(schema.at("grade_mark_mean"), 0.6, student_b::kCohort, st) == "66.0%");
    CHECK(display_value(schema.at("on_time_submission_count"), -1.0, student_b::kCohort, st) == "8");
    CHECK(display_value(schema.at("full_time_status"), 1.0, student_b::kCohort, st) == "full-time");
    // Far below the band clamps to the valid range instead of going negative.
    CHECK(display_value(schema.at("qualification_percent_completed"), -3.0, student_b::kCohort, st) == "0.0%");
    CHECK_THROWS_AS(display_value(schema.at("grade_mark_mean"), 0.0, "nowhere/2020", st), StatsError);
}

TEST_CASE("student B pathway denormalises to the expected raw changes") {
    const auto deltas = denormalize_cf(student_b::remedial_pathway(), student_b::kCohort, student_b::stats(),
                                       default_schema());
    REQUIRE(deltas.size() == 3);
    CHECK(deltas[0].from_text == "4.1%");
    CHECK(deltas[0].to_text == "8.2%");
    CHECK(deltas[0].direction == DeltaDirection::increase);
    CHECK(deltas[1].from_text == "part-time");
    CHECK(deltas[1].to_text == "full-time");
    CHECK(deltas[1].direction == DeltaDirection::switch_category);
    CHECK(deltas[2].from_text == "8");
    CHECK(deltas[2].to_text == "12");
    for (const auto& d : deltas) CHECK(raw_delta_from_json(raw_delta_to_json(d)) == d);
}

TEST_CASE("payload validation rejects unknown keys, nested values and orphan placeholders") {
    const auto schema = default_schema();
    auto p = status_payload();
    CHECK_NOTHROW(validate_payload(p, schema));
    auto orphan = p;
    orphan.response_template += "Also {{unknown_thing}}.\n";
    CHECK_THROWS_AS(validate_payload(orphan, schema), FeedbackError);
    auto extra = p;
    extra.data["learner_email"] = "x@y";
    CHECK_THROWS_AS(validate_payload(extra, schema), FeedbackError);
    auto nested = p;
    nested.data["programme"] = json::array({"a"});
    CHECK_THROWS_AS(validate_payload(nested, schema), FeedbackError);
    CHECK_THROWS_AS(build_prompt_payload(PromptPart::remedial, student_b::facts(), {}, schema), FeedbackError);
    CHECK(template_placeholders("{{a}} {{b}} {{a}}") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("payload round-trips through JSON and renders deterministically") {
    const auto p = status_payload();
    CHECK(PromptPayload::from_json(p.to_json()) == p);
    CHECK(PromptPayload::from_json(json::parse(p.to_json().dump())) == p);
    CHECK(render_prompt(p) == render_prompt(status_payload()));
    CHECK(render_offline(p) == render_offline(status_payload()));
}

TEST_CASE("golden student B prompts are stable") {
    CHECK(render_prompt(status_payload()) == fixture("student_b_status_prompt.txt"));
    CHECK(render_prompt(remedial_payload()) == fixture("student_b_remedial_prompt.txt"));
}

TEST_CASE("offline text is byte-identical to the golden files and carries bold values") {
    const auto status = render_offline(status_payload());
    const auto remedial = render_offline(remedial_payload());
    CHECK(status == fixture("student_b_status_offline.md"));
    CHECK(remedial == fixture("student_b_remedial_offline.md"));
    CHECK(status.find("**66.0%**") != std::string::npos);
    CHECK(status.find("**bachelor of science**") != std::string::npos);
    CHECK(remedial.find("from **4.1%** to **8.2%**") != std::string::npos);
    CHECK(remedial.find("from **part-time** to **full-time**") != std::string::npos);
    CHECK(remedial.find("from **8** to **12**") != std::string::npos);
}

TEST_CASE("status text contains no recommendation verbs") {
    std::string lower = render_offline(status_payload());
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    std::istringstream words(lower);
    std::string w;
    while (words >> w) {
        while (!w.empty() && !std::isalpha(static_cast<unsigned char>(w.back()))) w.pop_back();
        for (const auto& verb : recommendation_verbs()) CHECK_MESSAGE(w != verb, "status uses '" << verb << "'");
    }
}

TEST_CASE("responses with injected numbers are rejected") {
    const auto p = status_payload();
    CHECK_NOTHROW(validate_response(strip_bold(render_offline(p)), p));
    for (const char* name : {"injected_1.txt", "injected_2.txt", "injected_3.txt"}) {
        const auto text = fixture(name);
        try {
            validate_response(text, p);
            FAIL("fixture " << name << " was accepted");
        } catch (const FeedbackValidationError& e) {
            CHECK(std::string(e.what()).find("number") != std::string::npos);
            CHECK(e.raw_text == text);
        }
    }
    std::string dropped = strip_bold(render_offline(p));
    dropped.replace(dropped.find("on-campus"), 9, "campus");
    CHECK_THROWS_AS(validate_response(dropped, p), FeedbackValidationError);
    CHECK_THROWS_AS(validate_response(std::string(5000, 'a'), p), FeedbackValidationError);
}

TEST_CASE("live mode posts the prompt and validates the reply") {
    const auto p = remedial_payload();
    json seen;
    std::string auth;
    StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        reply(res, strip_bold(render_offline(p)));
    });
    const auto out = generate_feedback_text(p, live_config(stub.url()));
    CHECK(out.provenance == "llm");
    CHECK(out.text == strip_bold(render_offline(p)));
    CHECK(auth == "Bearer test-key");
    CHECK(seen["temperature"] == 0);
    CHECK(seen["messages"][0]["content"] == render_prompt(p));
    CHECK(generate_feedback_text(p, LlmConfig{}).provenance == "offline-template");
}

TEST_CASE("live mode retries transient failures and stops on auth errors") {
    const auto p = status_payload();
    std::atomic<int> calls{0};
    StubServer flaky([&](const httplib::Request&, httplib::Response& res) {
        if (++calls <= 2) {
            res.status = calls == 1 ? 503 : 429;
            return;
        }
        reply(res, strip_bold(render_offline(p)));
    });
    CHECK(generate_feedback_text(p, live_config(flaky.url())).provenance == "llm");
    CHECK(calls == 3);

    std::atomic<int> denied_calls{0};
    StubServer denied([&](const httplib::Request&, httplib::Response& res) {
        ++denied_calls;
        res.status = 401;
    });
    try {
        generate_feedback_text(p, live_config(denied.url()));
        FAIL("expected LlmError");
    } catch (const LlmError& e) {
        CHECK(std::string(e.what()).find("PRESCRIBE_LLM_MODE=offline") != std::string::npos);
    }
    CHECK(denied_calls == 1);

    StubServer liar([&](const httplib::Request&, httplib::Response& res) { reply(res, fixture("injected_1.txt")); });
    CHECK_THROWS_AS(generate_feedback_text(p, live_config(liar.url())), FeedbackValidationError);

    auto down = live_config("http://127.0.0.1:1/v1/chat/completions");
    down.max_retries = 1;
    down.timeout_s = 1;
    CHECK_THROWS_AS(generate_feedback_text(p, down), LlmError);
    CHECK_THROWS_AS(generate_feedback_text(p, live_config("")), LlmError);
}

TEST_CASE("LLM config reads the environment") {
    setenv("PRESCRIBE_LLM_MODE", "live", 1);
    setenv("PRESCRIBE_LLM_ENDPOINT", "http://localhost:9/x", 1);
    const auto c = LlmConfig::from_env(LlmConfig{});
    unsetenv("PRESCRIBE_LLM_MODE");
    unsetenv("PRESCRIBE_LLM_ENDPOINT");
    CHECK(c.mode == LlmMode::live);
    CHECK(c.endpoint == "http://localhost:9/x");
    CHECK_FALSE(c.to_json().contains("api_key"));
    CHECK_THROWS_AS(llm_mode_from("sometimes"), ConfigError);
}
