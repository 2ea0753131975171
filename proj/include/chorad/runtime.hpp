#pragma once

// Executes one role's ProcessCode as an explicit state machine.
//
// The machine never blocks: a driver asks for the enabled tasks, picks one and
// calls step(). Parallel branches inside a role are separate tasks over the
// same store. Blocking points are receives, rendezvous acks, guard/directive
// waits and barrier collections; everything else is enabled immediately.
// The same machine is driven by the simulator (one thread, scheduler-chosen
// interleaving) and by the threaded/networked drivers.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chorad/message.hpp"
#include "chorad/project.hpp"

namespace chorad {

class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TraceEvent {
    Role role;
    int task = 0;
    std::string action;
    std::string op;
    std::string peer;
    std::string detail;
};

/// Side effects a machine needs from its host.
class Effects {
public:
    virtual ~Effects() = default;
    virtual void post(Message m) = 0;
    virtual Value call_external(const std::string& fn, const std::string& address, const std::vector<Value>& args) = 0;
    virtual MatchResponse match_scope(const MatchRequest& req) = 0;
    /// Interactive input; nullopt when prompting is not available.
    virtual std::optional<std::string> prompt(const Role& role, const std::string& text) = 0;
    virtual void trace(const TraceEvent&) {}
};

struct RoleSetup {
    Role role;
    Role starter;
    std::vector<Role> all_roles;
    CodePtr code;
    std::map<std::string, std::string> function_addresses;  ///< function name -> service address
    std::optional<std::vector<std::string>> script;         ///< scripted getInput answers
};

std::shared_ptr<const RoleSetup> make_role_setup(const ProjectedApp& app, const Role& role,
                                                 std::optional<std::vector<std::string>> script);

struct AppliedRule {
    std::string scope_id;
    std::string rule_id;  ///< empty when the default body ran
};

class RoleMachine {
public:
    explicit RoleMachine(std::shared_ptr<const RoleSetup> setup);

    const Role& role() const { return setup_->role; }
    bool finished() const { return phase_ == Phase::Finished; }

    std::vector<int> enabled_tasks() const;
    bool any_enabled() const;

    /// Performs one atomic action of `task`. Throws RuntimeError.
    void step(int task, Effects& fx);

    void deliver(Message m) { mailbox_.push(std::move(m)); }

    const Store& store() const { return store_; }
    const Mailbox& mailbox() const { return mailbox_; }
    const std::vector<AppliedRule>& applied_rules() const { return applied_; }

    /// Human-readable description of what each live task waits for.
    std::vector<std::string> blocked_on() const;

    /// Structural digest of the complete machine state.
    std::string digest() const;

private:
    enum class Phase { BarrierSend, BarrierWait, Running, Finished };

    struct Frame {
        CodePtr code;
        int pc = 0;
        std::uint64_t seq = 0;
    };

    struct Task {
        std::vector<Frame> stack;
        int parent = -1;
        int pending_children = 0;
        bool done = false;
    };

    bool task_enabled(const Task& t) const;
    bool barrier_enabled() const;
    void barrier_step(Effects& fx);
    void settle(int task);
    void pop(int task);
    void push(int task, CodePtr code);
    void send(Effects& fx, MessageKind kind, const std::string& op, const Role& to, Json data);
    Value eval(const ExprPtr& e, Effects& fx);
    Value call(const std::string& fn, const std::vector<Value>& args, Effects& fx);
    void scope_coordinator_enter(int task, const ProcessCode::ScopeCoord& s, Effects& fx);
    void scope_follower_enter(int task, const ProcessCode::ScopeFollow& s, const Message& directive);
    void add_includes(const std::vector<Include>& includes);
    [[noreturn]] void fail(const std::string& what) const;

    std::shared_ptr<const RoleSetup> setup_;
    Phase phase_;
    std::vector<Task> tasks_;
    Store store_;
    Mailbox mailbox_;
    std::map<int, std::uint64_t> seq_;  ///< per outgoing message kind
    std::size_t script_pos_ = 0;
    std::map<std::string, std::string> extra_functions_;  ///< from applied rules
    std::vector<AppliedRule> applied_;
};

}  // namespace chorad
