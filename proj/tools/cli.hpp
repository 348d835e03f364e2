#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmpnet/model.hpp"

namespace pdmpnet::cli {

/// Validated run configuration with every default filled in.
struct RunConfig {
    nlohmann::json doc;  ///< canonical form (defaults applied), hashed for headers
    std::uint64_t seed = 0;
    std::filesystem::path out = "pdmpnet_out";
    bool quiet = false;

    std::string hash() const;  ///< FNV-1a of the canonical document, hex
    const nlohmann::json& section(const std::string& name) const { return doc.at(name); }
};

/// Default configuration document.
nlohmann::json default_config();

/// Merges `user` into the defaults; unknown keys and wrongly typed values
/// raise ConfigError.
nlohmann::json validate_config(const nlohmann::json& user);

/// Reads and validates a JSON config file (ConfigError on any problem).
nlohmann::json load_config(const std::filesystem::path& path);

std::shared_ptr<const PdmpModel> build_model(const RunConfig& cfg);

/// Commands; each writes its artifacts below cfg.out and returns an exit code.
int cmd_audit(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_solve(const RunConfig& cfg);
int cmd_project(const RunConfig& cfg);
int cmd_extend(const RunConfig& cfg);
int cmd_linearize(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

/// Runs a named command, mapping errors to exit codes (2 for configuration
/// errors, 1 otherwise) and printing a JSON error object on stderr.
int run_command(const std::string& name, const RunConfig& cfg);

/// Full command-line entry point.
int main_entry(int argc, char** argv);

}  // namespace pdmpnet::cli
