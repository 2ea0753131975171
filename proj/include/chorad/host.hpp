#pragma once

// Threaded drivers for RoleMachines: all roles in one process over an
// in-process transport, or one role per process over TCP.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chorad/adapt.hpp"
#include "chorad/project.hpp"
#include "chorad/runtime.hpp"
#include "chorad/services.hpp"

namespace chorad {

struct HostOptions {
    /// Per-role getInput answers; roles without an entry prompt on the console.
    std::map<Role, std::vector<std::string>> scripts;
    bool scripted = false;  ///< when set, roles without a script get an empty one
    /// Manager address; empty means `embedded_manager` (if any) or no adaptation.
    std::string manager;
    std::shared_ptr<AdaptationManager> embedded_manager;
    /// In-process stub functions unless `remote_functions` is set, in which
    /// case calls go to the include addresses.
    FunctionTable functions = FunctionTable::standard();
    bool remote_functions = false;
    int call_timeout_ms = 5000;
    int idle_timeout_ms = 30000;
};

struct RunResult {
    bool ok = true;
    std::string error;
    std::map<Role, Store> final_states;
    std::vector<AppliedRule> applied_rules;
};

RunResult run_all(const ProjectedApp& app, const HostOptions& opts);

/// Listens on `listen` (defaults to the role's location) and runs one role.
RunResult run_role(const ProjectedApp& app, const Role& role, const std::string& listen, const HostOptions& opts);

}  // namespace chorad
