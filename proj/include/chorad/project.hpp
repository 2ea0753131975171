#pragma once

// Endpoint projection: one ProcessCode per role, with the auxiliary
// communications that keep conditionals, loops and scopes coordinated.

#include <stdexcept>
#include <string>
#include <vector>

#include "chorad/ast.hpp"

namespace chorad {

struct ProcessCode;
using CodePtr = std::shared_ptr<const ProcessCode>;

struct ProcessCode {
    struct Nop {};
    struct LocalAssign {
        std::string var;
        ExprPtr expr;
    };
    struct CallExternal {
        std::string function;
        std::vector<ExprPtr> args;
        std::string result_var;
    };
    struct SendTo {
        std::string op;
        Role peer;
        ExprPtr expr;
    };
    struct RecvFrom {
        std::string op;
        Role peer;
        std::string var;
    };
    struct SeqP {
        std::vector<CodePtr> steps;
    };
    struct ParP {
        std::vector<CodePtr> branches;
    };
    struct IfLocal {
        ExprPtr guard;
        std::vector<Role> involved;
        std::string aux_op;
        CodePtr then_p;
        CodePtr else_p;
    };
    struct IfFollow {
        std::string aux_op;
        Role evaluator;
        CodePtr then_p;
        CodePtr else_p;
    };
    struct WhileLocal {
        ExprPtr guard;
        std::vector<Role> involved;
        std::string guard_op;
        std::string ack_op;
        CodePtr body;
    };
    struct WhileFollow {
        std::string guard_op;
        std::string ack_op;
        Role evaluator;
        CodePtr body;
    };
    struct ScopeCoord {
        NodeId scope_id;
        PropertySet props;
        std::vector<Role> involved;
        std::string directive_op;
        std::string done_op;
        std::string default_source;
        CodePtr default_p;
    };
    struct ScopeFollow {
        NodeId scope_id;
        Role coordinator;
        std::string directive_op;
        std::string done_op;
        CodePtr default_p;
    };

    using Node = std::variant<Nop, LocalAssign, CallExternal, SendTo, RecvFrom, SeqP, ParP, IfLocal, IfFollow,
                              WhileLocal, WhileFollow, ScopeCoord, ScopeFollow>;

    Node node;
    NodeId origin;  ///< id of the behaviour node this code was projected from

    bool is_nop() const { return std::holds_alternative<Nop>(node); }
    template <class T> const T* as() const { return std::get_if<T>(&node); }
};

struct ScopeInfo {
    Role coordinator;
    std::vector<Role> involved;
    PropertySet props;
    std::string body_source;
};

struct ProjectedApp {
    std::map<Role, CodePtr> per_role;
    Role starter;
    std::vector<Include> includes;
    std::map<Role, std::string> locations;
    std::map<NodeId, ScopeInfo> scope_table;

    std::vector<Role> roles() const;
};

class ProjectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AuxPurpose { Guard, Ack, Directive, Done };

const char* to_string(AuxPurpose p);

/// `_aux_<purpose>_<path digits joined by '_'>`
std::string aux_op_name(const NodeId& id, AuxPurpose purpose);
bool is_aux_op(const std::string& op);

/// Root id of a rule body adapting the scope `scope_id`. A scope's own body is
/// its child 0, so child 1 never clashes with host-program nodes.
NodeId rule_root(const NodeId& scope_id);

/// Projects a normalized behaviour onto one role.
CodePtr project_behaviour(const Behaviour& b, const Role& role);

/// Roles without a declared location listen on kFirstAutoPort + their index
/// in the sorted role list.
inline constexpr int kFirstAutoPort = 10500;

/// Requires validate_program (and connectedness, unless disabled) to pass;
/// throws ProjectionError otherwise. Skipping connectedness exists for
/// negative-control experiments only.
ProjectedApp project(const Program& p, bool require_connected = true);

/// Deterministic per-role view of a rule body installed into `scope_id`.
/// Throws ProjectionError when `target` is neither in the body nor the coordinator.
CodePtr project_rule_body(const BehaviourPtr& body, const NodeId& scope_id, const Role& coordinator,
                          const Role& target);

Json to_json(const ProcessCode& code);
Json to_json(const ProjectedApp& app);

}  // namespace chorad
