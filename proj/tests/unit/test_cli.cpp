#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "doctest.h"
#include "small_run.hpp"

#include "prescriptive/util.hpp"

using namespace prescriptive;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& out) {
    const std::string cmd = std::string(PRESCRIBE_BIN) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("unknown subcommands and missing arguments exit non-zero with usage") {
    const auto dir = small_run::temp_dir("cli-usage");
    CHECK(run("frobnicate", dir / "o.txt") != 0);
    CHECK(read_file((dir / "o.txt").string()).find("Usage") != std::string::npos);
    CHECK(run("", dir / "o.txt") != 0);
    CHECK(run("cf --run-dir " + dir.string(), dir / "o.txt") != 0);
    CHECK(run("train --run-dir " + (dir / "empty").string(), dir / "o.txt") == 1);
    CHECK(read_file((dir / "o.txt").string()).find("prepare") != std::string::npos);
}

TEST_CASE("cf then feedback through the command line") {
    const auto dir = small_run::temp_dir("cli-run");
    auto cfg = small_run::config();
    write_file((dir / "cfg.json").string(), cfg.to_json().dump(2));
    const std::string common = " --config " + (dir / "cfg.json").string() + " --run-dir " + (dir / "run").string();
    const auto log = dir / "log.txt";
    REQUIRE(run("synth --rows 900" + common, log) == 0);
    REQUIRE(run("prepare" + common, log) == 0);
    REQUIRE(run("train" + common, log) == 0);
    REQUIRE(run("evaluate" + common, log) == 0);
    CHECK(read_file(log.string()).find("mode") != std::string::npos);

    cfg.generator.n_rows = 900;
    const auto snap = load_snapshot(RunPaths{dir / "run"}, cfg);
    std::string chosen;
    for (const auto& id : small_run::at_risk_ids(*snap)) {
        if (run("cf --student " + id + " --k 2" + common, log) == 0) {
            chosen = id;
            break;
        }
    }
    REQUIRE_FALSE(chosen.empty());
    CHECK(fs::exists(dir / "run" / ("cf_" + chosen + ".csv")));
    REQUIRE(run("feedback --student " + chosen + " --pf 1" + common, log) == 0);
    const auto md = read_file((dir / "run" / ("feedback_" + chosen + "_pf1.md")).string());
    CHECK(md.find("You are enrolled in") != std::string::npos);
    CHECK(md.find("these changes are recommended") != std::string::npos);
    CHECK(run("feedback --student " + chosen + " --pf 9" + common, log) == 1);

    const auto manifest = nlohmann::json::parse(read_file((dir / "run" / "manifest.json").string()));
    CHECK(manifest.contains("artifacts"));
    for (const auto& [name, a] : manifest["artifacts"].items()) {
        const auto body = read_file((dir / "run" / name).string());
        CHECK(a["sha256"] == sha256_hex(body));
    }
    CHECK(run("explain-local --student NOPE" + common, log) == 1);
}
