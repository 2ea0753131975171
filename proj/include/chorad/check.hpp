#pragma once

// Static validation: connectedness plus name and role sanity checks.
//
// An event signature is the role set of an initial or final action of a term.
// Single-role actions give {r}, interactions {sender, receiver}; the closing
// event of an If with an empty branch, of a While, and of a Scope carries the
// evaluator (coordinator) followed by every other role of the construct, since
// the projection closes those constructs with a broadcast or barrier that all
// of them take part in.
//
// Sequence condition on Seq(a, b): some final event of `a` shares a role with
// some initial event of `b`. Parallel condition on Par(a, b): the interaction
// keys (op, sender, receiver) occurring anywhere in `a` and in `b` are disjoint.

#include <string>
#include <vector>

#include "chorad/ast.hpp"
#include "chorad/parser.hpp"

namespace chorad {

struct EventSignature {
    std::vector<Role> roles;  ///< initiator first
    NodeId origin;
    SourcePos pos;

    const Role& initiator() const { return roles.front(); }
    bool shares_role_with(const EventSignature& other) const;

    friend bool operator==(const EventSignature& a, const EventSignature& b)
    {
        return a.roles == b.roles && a.origin == b.origin;
    }
};

enum class ViolationKind { Sequence, Parallel, Role, Name };

const char* to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    Severity severity = Severity::Error;
    NodeId first;   ///< predecessor / left branch / offending node
    NodeId second;  ///< continuation / right branch
    SourcePos pos;  ///< where the problem is reported
    std::string message;
};

/// `file:line:col: kind: message`
std::string format_violation(const std::string& file, const Violation& v);

std::vector<EventSignature> trans_initial(const Behaviour& b);
std::vector<EventSignature> trans_final(const Behaviour& b);

/// Expects a normalized behaviour.
std::vector<Violation> check_connectedness(const Behaviour& b);

std::vector<Violation> check_rule(const Rule& rule);

std::vector<Violation> validate_program(const Program& p);

/// validate_program followed by connectedness of the normalized body.
std::vector<Violation> check_program(const Program& p);

bool has_errors(const std::vector<Violation>& vs);

}  // namespace chorad
