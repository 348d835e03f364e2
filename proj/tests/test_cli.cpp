#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

using namespace pdmpnet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pdmpnet_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "pdmpnet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main_entry(static_cast<int>(argv.size()), argv.data());
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Small configuration that keeps every command fast.
json small_config() {
    return {{"grid", {{"dx", 0.1}, {"n_a", 5}}},
            {"audit", {{"n_samples", 200}}},
            {"simulate", {{"n_paths", 40}, {"horizon", 5.0}}}};
}

}  // namespace

TEST_CASE("config validation rejects unknown keys and wrong types") {
    CHECK_THROWS_AS(cli::validate_config({{"grid", {{"dxx", 0.1}}}}), ConfigError);
    CHECK_THROWS_AS(cli::validate_config({{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(cli::validate_config({{"grid", {{"dx", "fine"}}}}), ConfigError);
    const json merged = cli::validate_config({{"grid", {{"dx", 0.05}}}});
    CHECK(merged["grid"]["dx"] == 0.05);
    CHECK(merged["grid"]["n_a"] == 9);
    CHECK(merged["model"]["name"] == "traffic3");
}

TEST_CASE("configuration errors exit with code 2") {
    const fs::path dir = scratch("config_errors");
    CHECK(run({"--config", write_config(dir, {{"grid", {{"spacing", 0.1}}}}).string(), "--out", dir.string(), "solve"}) == 2);
    std::ofstream(dir / "broken.json") << "{ \"grid\": ";
    CHECK(run({"--config", (dir / "broken.json").string(), "--out", dir.string(), "audit"}) == 2);
    CHECK(run({"--config", (dir / "missing.json").string(), "--out", dir.string(), "audit"}) == 2);
    CHECK(run({"--out", dir.string(), "no-such-command"}) == 2);
    CHECK(run({"--out", dir.string()}) == 2);
}

TEST_CASE("audit passes on the default model and fails on a planted kernel defect") {
    const fs::path dir = scratch("audit");
    json cfg = small_config();
    CHECK(run({"--config", write_config(dir, cfg).string(), "--out", (dir / "ok").string(), "--quiet", "audit"}) == 0);
    cfg["model"] = {{"params", {{"q_self", 0.5}}}};
    CHECK(run({"--config", write_config(dir, cfg).string(), "--out", (dir / "bad").string(), "--quiet", "audit"}) == 1);
    const json doc = json::parse(slurp(dir / "bad" / "audit.json"));
    CHECK(doc["command"] == "audit");
    bool a3_failed = false;
    for (const auto& e : doc["result"]["assumptions"])
        if (e["name"] == "A3") a3_failed = !e["pass"].get<bool>();
    CHECK(a3_failed);
    CHECK_FALSE(doc["result"]["all_passed"].get<bool>());
}

TEST_CASE("solve is byte-for-byte reproducible and labels its outputs") {
    const fs::path dir = scratch("solve");
    const std::string cfg = write_config(dir, small_config()).string();
    REQUIRE(run({"--config", cfg, "--out", (dir / "a").string(), "--seed", "3", "--quiet", "solve"}) == 0);
    REQUIRE(run({"--config", cfg, "--out", (dir / "b").string(), "--seed", "3", "--quiet", "solve"}) == 0);
    for (const char* f : {"value.csv", "iteration_log.json", "hjb_residual.json"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    const std::string csv = slurp(dir / "a" / "value.csv");
    CHECK(csv.rfind("# pdmpnet solve config_hash=", 0) == 0);
    CHECK(csv.find("seed=3") != std::string::npos);
    const json log = json::parse(slurp(dir / "a" / "iteration_log.json"));
    CHECK(log["command"] == "solve");
    CHECK(log["seed"] == 3);
    CHECK(log.contains("config_hash"));
    CHECK(log.contains("result"));
}

TEST_CASE("simulate honours the seed") {
    const fs::path dir = scratch("simulate");
    const std::string cfg = write_config(dir, small_config()).string();
    REQUIRE(run({"--config", cfg, "--out", (dir / "a").string(), "--seed", "1", "--quiet", "simulate"}) == 0);
    REQUIRE(run({"--config", cfg, "--out", (dir / "b").string(), "--seed", "1", "--quiet", "simulate"}) == 0);
    REQUIRE(run({"--config", cfg, "--out", (dir / "c").string(), "--seed", "2", "--quiet", "simulate"}) == 0);
    CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
    CHECK(slurp(dir / "a" / "mc_cost.json") == slurp(dir / "b" / "mc_cost.json"));
    CHECK(slurp(dir / "a" / "trajectory.csv") != slurp(dir / "c" / "trajectory.csv"));
    const json mc = json::parse(slurp(dir / "a" / "mc_cost.json"));
    CHECK(mc["result"].contains("estimate"));
    CHECK(mc["result"].contains("stderr"));
    CHECK(mc["result"].contains("tail_bound"));
}

TEST_CASE("config hash depends on the document") {
    cli::RunConfig a, b;
    a.doc = cli::validate_config(json::object());
    b.doc = cli::validate_config({{"grid", {{"dx", 0.05}}}});
    CHECK(a.hash() != b.hash());
    CHECK(a.hash() == cli::RunConfig{a.doc, 7}.hash());
}
