#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>

#include "json.hpp"

#include "prescriptive/config.hpp"
#include "prescriptive/drafts.hpp"
#include "prescriptive/pipeline.hpp"

namespace httplib {
class Server;
}

namespace prescriptive {

struct HttpResponse {
    int status = 200;
    nlohmann::json body;
};

// JSON API over an immutable snapshot of a run directory. handle() is the whole
// router; bind() only adapts it to an HTTP server, so tests can call either.
class Service {
public:
    Service(RunPaths paths, Config cfg, std::shared_ptr<const Snapshot> snapshot = nullptr,
            std::string drafts_log = {});

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body,
                        const std::string& authorization = {});
    void bind(httplib::Server& server);

    std::shared_ptr<const Snapshot> snapshot() const;
    std::size_t reload_count() const;
    DraftStore& drafts() { return drafts_; }

private:
    HttpResponse route(const std::string& method, const std::string& path, const nlohmann::json& body);
    HttpResponse reload();
    nlohmann::json explanation(const std::shared_ptr<const Snapshot>& snap, const std::string& id);

    RunPaths paths_;
    Config cfg_;
    mutable std::mutex snap_mu_;
    std::shared_ptr<const Snapshot> snap_;
    std::size_t reloads_ = 0;
    DraftStore drafts_;
    std::counting_semaphore<1024> whatif_slots_;
    std::mutex cache_mu_;
    std::map<std::string, nlohmann::json> explanation_cache_;  // keyed by model version + learner
};

void serve(Service& service, const std::string& host, int port);

}  // namespace prescriptive
