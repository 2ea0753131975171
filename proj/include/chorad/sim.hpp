#pragma once

// Deterministic in-process execution of a projected application plus its
// middleware. Roles are RoleMachines over an instant in-process transport; a
// seeded scheduler (or an exhaustive explorer) picks the next micro-step.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chorad/project.hpp"
#include "chorad/runtime.hpp"
#include "chorad/services.hpp"

namespace chorad {

enum class SimMode { Random, Exhaustive };
enum class Outcome { Terminated, Deadlock, StepLimit, Error };

const char* to_string(Outcome o);

struct RulePublication {
    std::uint64_t step = 0;  ///< fires before the step with this index
    int server = 0;
    std::string source;
};

struct EnvChange {
    std::uint64_t step = 0;
    std::string key;
    Value value;
};

struct SimConfig {
    std::uint64_t seed = 0;
    SimMode mode = SimMode::Random;
    std::map<Role, std::vector<std::string>> scripts;
    int servers = 1;
    std::vector<RulePublication> rules;
    std::vector<EnvChange> env;
    std::uint64_t max_steps = 100000;
    std::size_t state_cap = 1000000;  ///< exhaustive mode only
    FunctionTable functions = FunctionTable::standard();
    bool keep_trace = true;
};

// Message categories counted by the simulator.
inline constexpr const char* kCatUser = "user";            // choreography interactions
inline constexpr const char* kCatAck = "ack";              // rendezvous acks
inline constexpr const char* kCatGuard = "guard";          // if/while guard broadcasts
inline constexpr const char* kCatIteration = "iteration";  // while iteration acks
inline constexpr const char* kCatDirective = "directive";
inline constexpr const char* kCatDone = "done";
inline constexpr const char* kCatBarrier = "barrier";
inline constexpr const char* kCatMiddleware = "middleware";

struct SimReport {
    Outcome outcome = Outcome::Terminated;
    std::string error;
    std::uint64_t steps = 0;
    std::map<Role, Store> final_states;
    std::map<std::string, std::uint64_t> message_counts;
    std::vector<std::string> trace;  ///< "step role task action op peer detail"
    std::uint64_t trace_hash = 0;
    std::vector<AppliedRule> applied_rules;
    std::string buffer;  ///< final shared buffer of the function service
    std::vector<std::string> leaks;    ///< conservation failures (empty when clean)
    std::vector<std::string> blocked;  ///< per-role waits on deadlock
    // exhaustive mode
    std::size_t states_explored = 0;
    std::map<std::string, std::uint64_t> outcome_counts;

    Json to_json() const;
};

SimReport simulate(const ProjectedApp& app, const SimConfig& cfg);
/// Projects `p` first (connectedness required).
SimReport simulate(const Program& p, const SimConfig& cfg);

struct ExploreSummary {
    std::uint64_t runs = 0;
    std::uint64_t terminated = 0;
    std::uint64_t deadlocks = 0;
    std::uint64_t errors = 0;
    std::uint64_t step_limits = 0;
    std::uint64_t leaks = 0;
    std::uint64_t adapted_runs = 0;  ///< runs where at least one rule was applied
    std::optional<std::uint64_t> counterexample_seed;
    std::optional<SimReport> counterexample;

    bool operator==(const ExploreSummary& o) const;
};

/// Runs seeds base.seed .. base.seed+seeds-1. The counterexample is the lowest
/// failing seed, so both variants return identical summaries.
ExploreSummary explore_deadlocks(const ProjectedApp& app, std::uint64_t seeds, const SimConfig& base);
/// Serial reference of explore_deadlocks.
ExploreSummary explore_deadlocks_serial(const ProjectedApp& app, std::uint64_t seeds, const SimConfig& base);

/// Message counts of one run; throws RuntimeError unless the run terminates.
std::map<std::string, std::uint64_t> count_overhead(const ProjectedApp& app, const SimConfig& cfg);

std::uint64_t fnv1a(std::uint64_t h, const std::string& s);
inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;

}  // namespace chorad
