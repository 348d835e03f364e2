#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdmpnet/model.hpp"

namespace pdmpnet {

struct AuditEntry {
    std::string name;
    bool pass = true;
    std::string detail;
    nlohmann::json witness;  ///< null when passing
};

/// Per-assumption verdicts of a sampled audit.
struct AuditReport {
    std::string model;
    int n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<AuditEntry> entries;
    std::vector<std::string> notes;

    const AuditEntry* find(const std::string& name) const;
    bool passed(const std::string& name) const;
    bool all_passed() const;
    /// True if every listed assumption passed (unknown names count as failed).
    bool passed_all_of(const std::vector<std::string>& names) const;
    nlohmann::json to_json() const;
};

/// Samples the model on the base network and checks the regularity,
/// controllability and compatibility assumptions against the declared
/// constants.  Failures are report entries carrying a witness point.
AuditReport audit_assumptions(const PdmpModel& model, int n_samples, std::uint64_t seed);

}  // namespace pdmpnet
