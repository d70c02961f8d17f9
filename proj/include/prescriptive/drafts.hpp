#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace prescriptive {

struct FeedbackDraft {
    std::string id;
    std::string learner_id;
    int pf_index = 1;
    std::string status_text;
    std::string remedial_text;
    std::string provenance;  // "llm" or "offline-template"
    std::string created_at;
    bool approved = false;
    std::string advisor_note;
    std::string approved_at;
    nlohmann::json deltas = nlohmann::json::array();

    nlohmann::json to_json() const;
    static FeedbackDraft from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

// Append-only JSON-lines log of draft and approval events. An empty path keeps
// everything in memory. Approval is compare-and-set: the second approval of a
// draft fails with Conflict.
class DraftStore {
public:
    explicit DraftStore(std::string log_path = {});

    FeedbackDraft create(FeedbackDraft draft);
    FeedbackDraft approve(const std::string& id, const std::string& note);
    std::optional<FeedbackDraft> get(const std::string& id) const;
    std::vector<FeedbackDraft> list() const;

private:
    void append(const nlohmann::json& event);
    void replay();

    std::string path_;
    mutable std::mutex mu_;
    std::map<std::string, FeedbackDraft> drafts_;
    std::size_t next_ = 1;
};

}  // namespace prescriptive
