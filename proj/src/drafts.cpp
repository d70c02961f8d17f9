#include "prescriptive/drafts.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prescriptive/errors.hpp"

namespace prescriptive {

using nlohmann::json;

json FeedbackDraft::to_json() const {
    return json{{"id", id},
                {"learner_id", learner_id},
                {"pf_index", pf_index},
                {"status_text", status_text},
                {"remedial_text", remedial_text},
                {"provenance", provenance},
                {"created_at", created_at},
                {"approved", approved},
                {"advisor_note", advisor_note},
                {"approved_at", approved_at},
                {"deltas", deltas}};
}

FeedbackDraft FeedbackDraft::from_json(const json& j) {
    FeedbackDraft d;
    try {
        d.id = j.value("id", std::string{});
        d.learner_id = j.at("learner_id").get<std::string>();
        d.pf_index = j.value("pf_index", 1);
        d.status_text = j.value("status_text", std::string{});
        d.remedial_text = j.value("remedial_text", std::string{});
        d.provenance = j.value("provenance", std::string{});
        d.created_at = j.value("created_at", std::string{});
        d.approved = j.value("approved", false);
        d.advisor_note = j.value("advisor_note", std::string{});
        d.approved_at = j.value("approved_at", std::string{});
        d.deltas = j.value("deltas", json::array());
    } catch (const json::exception& e) {
        throw FeedbackError(std::string("malformed draft: ") + e.what());
    }
    return d;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

DraftStore::DraftStore(std::string log_path) : path_(std::move(log_path)) {
    if (!path_.empty()) replay();
}

void DraftStore::replay() {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json ev;
        try {
            ev = json::parse(line);
        } catch (const json::exception&) {
            throw FeedbackError("draft log " + path_ + ": line " + std::to_string(lineno) + " is not JSON");
        }
        const auto kind = ev.value("event", std::string{});
        if (kind == "draft") {
            auto d = FeedbackDraft::from_json(ev.at("draft"));
            drafts_[d.id] = d;
            ++next_;
        } else if (kind == "approve") {
            auto it = drafts_.find(ev.value("id", std::string{}));
            if (it == drafts_.end()) {
                throw FeedbackError("draft log " + path_ + ": approval for unknown draft at line " +
                                    std::to_string(lineno));
            }
            it->second.approved = true;
            it->second.advisor_note = ev.value("note", std::string{});
            it->second.approved_at = ev.value("at", std::string{});
        } else {
            throw FeedbackError("draft log " + path_ + ": unknown event at line " + std::to_string(lineno));
        }
    }
}

void DraftStore::append(const json& event) {
    if (path_.empty()) return;
    const auto parent = std::filesystem::path(path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("cannot append to draft log " + path_);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw Error("write to draft log " + path_ + " failed");
}

FeedbackDraft DraftStore::create(FeedbackDraft draft) {
    std::lock_guard lock(mu_);
    char id[32];
    std::snprintf(id, sizeof id, "draft-%06zu", next_);
    draft.id = id;
    draft.approved = false;
    draft.approved_at.clear();
    if (draft.created_at.empty()) draft.created_at = utc_timestamp();
    append(json{{"event", "draft"}, {"draft", draft.to_json()}});
    ++next_;
    drafts_[draft.id] = draft;
    return draft;
}

FeedbackDraft DraftStore::approve(const std::string& id, const std::string& note) {
    std::lock_guard lock(mu_);
    auto it = drafts_.find(id);
    if (it == drafts_.end()) throw NotFound("draft '" + id + "' does not exist");
    if (it->second.approved) throw Conflict("draft '" + id + "' is already approved");
    const auto at = utc_timestamp();
    append(json{{"event", "approve"}, {"id", id}, {"note", note}, {"at", at}});
    it->second.approved = true;
    it->second.advisor_note = note;
    it->second.approved_at = at;
    return it->second;
}

std::optional<FeedbackDraft> DraftStore::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = drafts_.find(id);
    if (it == drafts_.end()) return std::nullopt;
    return it->second;
}

std::vector<FeedbackDraft> DraftStore::list() const {
    std::lock_guard lock(mu_);
    std::vector<FeedbackDraft> out;
    for (const auto& [id, d] : drafts_) out.push_back(d);
    return out;
}

}  // namespace prescriptive
