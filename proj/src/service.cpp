#include "prescriptive/service.hpp"

#include "httplib.h"

#include <algorithm>
#include <iostream>

#include "prescriptive/counterfactual.hpp"
#include "prescriptive/errors.hpp"
#include "prescriptive/feedback.hpp"
#include "prescriptive/llm_client.hpp"

namespace prescriptive {

using nlohmann::json;

namespace {

std::vector<std::string> segments(const std::string& path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        const auto j = path.find('/', i);
        if (i < path.size()) out.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
        i = j == std::string::npos ? path.size() : j;
    }
    return out;
}

HttpResponse error(int status, const std::string& kind, const std::string& message, json extra = json::object()) {
    extra["error"] = kind;
    extra["message"] = message;
    return {status, extra};
}

class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
    ~SlotGuard() { s_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1024>& s_;
};

}  // namespace

Service::Service(RunPaths paths, Config cfg, std::shared_ptr<const Snapshot> snapshot, std::string drafts_log)
    : paths_(std::move(paths)),
      cfg_(std::move(cfg)),
      snap_(snapshot ? std::move(snapshot) : load_snapshot(paths_, cfg_)),
      drafts_(std::move(drafts_log)),
      whatif_slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(cfg_.service.max_concurrent_whatif, 1, 1024))) {}

std::shared_ptr<const Snapshot> Service::snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snap_;
}

std::size_t Service::reload_count() const {
    std::lock_guard lock(snap_mu_);
    return reloads_;
}

HttpResponse Service::reload() {
    auto fresh = load_snapshot(paths_, cfg_);
    std::lock_guard lock(snap_mu_);
    snap_ = std::move(fresh);
    ++reloads_;
    return {200, json{{"model_version", snap_->version}, {"reloads", reloads_}}};
}

json Service::explanation(const std::shared_ptr<const Snapshot>& snap, const std::string& id) {
    const auto key = snap->version + "/" + id;
    {
        std::lock_guard lock(cache_mu_);
        if (auto it = explanation_cache_.find(key); it != explanation_cache_.end()) return it->second;
    }
    auto doc = explanation_json(*snap, id);
    std::lock_guard lock(cache_mu_);
    return explanation_cache_.emplace(key, std::move(doc)).first->second;
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body,
                             const std::string& authorization) {
    try {
        if (!(method == "GET" && path == "/healthz") && !cfg_.service.token.empty() &&
            authorization != "Bearer " + cfg_.service.token) {
            return error(401, "unauthorized", "missing or wrong bearer token");
        }
        json parsed = json::object();
        if (!body.empty()) {
            try {
                parsed = json::parse(body);
            } catch (const json::parse_error& e) {
                return error(400, "bad_request", std::string("body is not valid JSON: ") + e.what());
            }
        }
        return route(method, path, parsed);
    } catch (const NotFound& e) {
        return error(404, "not_found", e.what());
    } catch (const Conflict& e) {
        return error(409, "conflict", e.what());
    } catch (const NoFeasiblePathway& e) {
        json extra = json::object();
        if (e.best_invalid) extra["best_invalid"] = counterfactual_to_json(*e.best_invalid);
        return error(422, "no_feasible_pathway", e.what(), extra);
    } catch (const LlmError& e) {
        return error(502, "llm_unavailable", e.what());
    } catch (const FeedbackValidationError& e) {
        return error(502, "llm_response_rejected", e.what(), json{{"raw_text", e.raw_text}});
    } catch (const ConfigError& e) {
        return error(422, "invalid_constraints", e.what());
    } catch (const ConstraintViolation& e) {
        return error(422, "constraint_violation", e.what());
    } catch (const ExplainError& e) {
        return error(422, "unprocessable", e.what());
    } catch (const FeedbackError& e) {
        return error(422, "unprocessable", e.what());
    } catch (const Error& e) {
        return error(500, "internal", e.what());
    } catch (const std::exception& e) {
        return error(500, "internal", e.what());
    }
}

HttpResponse Service::route(const std::string& method, const std::string& path, const json& body) {
    const auto seg = segments(path);
    auto snap = snapshot();
    if (method == "GET") {
        if (seg == std::vector<std::string>{"healthz"}) {
            return {200, json{{"status", "ok"}, {"model_version", snap->version}, {"students", snap->latest.size()}}};
        }
        if (seg == std::vector<std::string>{"students"}) return {200, student_list_json(*snap)};
        if (seg.size() == 3 && seg[0] == "students" && seg[2] == "prediction") {
            return {200, prediction_json(*snap, seg[1])};
        }
        if (seg.size() == 3 && seg[0] == "students" && seg[2] == "explanation") {
            return {200, explanation(snap, seg[1])};
        }
        if (seg.size() == 2 && seg[0] == "feedback") {
            auto d = drafts_.get(seg[1]);
            if (!d) throw NotFound("draft '" + seg[1] + "' does not exist");
            return {200, d->to_json()};
        }
    } else if (method == "POST") {
        if (seg.size() == 3 && seg[0] == "students" && seg[2] == "whatif") {
            snap->row_of(seg[1]);
            SlotGuard slot(whatif_slots_);
            return {200, whatif_json(*snap, seg[1], body)};
        }
        if (seg.size() == 4 && seg[0] == "students" && seg[2] == "feedback" && seg[3] == "draft") {
            snap->row_of(seg[1]);
            const int pf = body.value("pf", 1);
            json pathway;
            if (body.contains("pathway")) {
                pathway = body["pathway"];
            } else {
                SlotGuard slot(whatif_slots_);
                const auto w = whatif_json(*snap, seg[1], body.value("whatif", json::object()));
                const auto& pws = w.at("pathways");
                if (pf < 1 || static_cast<std::size_t>(pf) > pws.size()) {
                    throw ConfigError("PF" + std::to_string(pf) + " is not among the " + std::to_string(pws.size()) +
                                      " pathways");
                }
                pathway = pws.at(static_cast<std::size_t>(pf - 1));
            }
            const auto fb = feedback_json(*snap, seg[1], pathway, pf, LlmConfig::from_env(cfg_.llm));
            FeedbackDraft d;
            d.learner_id = seg[1];
            d.pf_index = pf;
            d.status_text = fb["status"]["text"].get<std::string>();
            d.remedial_text = fb["remedial"]["text"].get<std::string>();
            d.provenance = fb["provenance"].get<std::string>();
            d.deltas = fb["deltas"];
            return {201, drafts_.create(std::move(d)).to_json()};
        }
        if (seg.size() == 3 && seg[0] == "feedback" && seg[2] == "approve") {
            return {200, drafts_.approve(seg[1], body.value("note", std::string{})).to_json()};
        }
        if (seg == std::vector<std::string>{"admin", "reload"}) return reload();
    } else {
        return error(405, "method_not_allowed", "method " + method + " is not supported");
    }
    return error(404, "not_found", "no route for " + method + " " + path);
}

void Service::bind(httplib::Server& server) {
    auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
        const auto out = handle(req.method, req.path, req.body, req.get_header_value("Authorization"));
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    server.Get(R"(/.*)", adapt);
    server.Post(R"(/.*)", adapt);
}

void serve(Service& service, const std::string& host, int port) {
    httplib::Server server;
    service.bind(server);
    std::cerr << "listening on " << host << ":" << port << " (model " << service.snapshot()->version << ")\n";
    if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace prescriptive
