#pragma once

// Abstract syntax of choreographies, rules and expressions.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "chorad/value.hpp"

namespace chorad {

using Role = std::string;
using PropertySet = std::map<std::string, Value>;

struct SourcePos {
    int line = 0;
    int column = 0;
};

/// Path of child indices from the root. Program bodies are rooted at {0}.
struct NodeId {
    std::vector<int> path;

    NodeId child(int index) const;
    /// Digits joined by '_', e.g. "0_1_1".
    std::string str() const;

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
    friend bool operator==(const NodeId&, const NodeId&) = default;
};

// ---------------------------------------------------------------------------
// Expressions

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Gt, Le, Ge, And, Or };
enum class UnaryOp { Not };

const char* to_string(BinaryOp op);

struct Expr {
    struct Literal {
        Value value;
    };
    /// `ns` is empty for plain variables, "N"/"E" in rule conditions.
    struct Var {
        std::string ns;
        std::string name;
    };
    struct Unary {
        UnaryOp op;
        ExprPtr operand;
    };
    struct Binary {
        BinaryOp op;
        ExprPtr lhs;
        ExprPtr rhs;
    };
    struct Call {
        std::string function;
        std::vector<ExprPtr> args;
    };

    std::variant<Literal, Var, Unary, Binary, Call> node;
    SourcePos pos;
};

ExprPtr make_literal(Value v, SourcePos pos = {});
ExprPtr make_var(std::string name, std::string ns = {}, SourcePos pos = {});
ExprPtr make_not(ExprPtr e, SourcePos pos = {});
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos = {});
ExprPtr make_call(std::string fn, std::vector<ExprPtr> args, SourcePos pos = {});

std::string pretty_print(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

/// Every Var referenced by `e`, in source order.
std::vector<Expr::Var> vars_of(const Expr& e);
/// Names of every function called in `e`.
std::vector<std::string> calls_of(const Expr& e);

// ---------------------------------------------------------------------------
// Behaviours

struct Behaviour;
using BehaviourPtr = std::shared_ptr<const Behaviour>;

struct Behaviour {
    struct Skip {};
    struct Assign {
        std::string var;
        Role role;
        ExprPtr rhs;
    };
    struct Interaction {
        std::string op;
        Role sender;
        ExprPtr send_expr;
        Role receiver;
        std::string recv_var;
    };
    struct Seq {
        BehaviourPtr first;
        BehaviourPtr second;
    };
    struct Par {
        BehaviourPtr left;
        BehaviourPtr right;
    };
    /// `else_b` is Skip when the source has no else branch.
    struct If {
        ExprPtr guard;
        Role evaluator;
        BehaviourPtr then_b;
        BehaviourPtr else_b;
    };
    struct While {
        ExprPtr guard;
        Role evaluator;
        BehaviourPtr body;
    };
    /// The scope identifier is the node's own NodeId.
    struct Scope {
        Role coordinator;
        BehaviourPtr body;
        PropertySet props;
    };

    using Node = std::variant<Skip, Assign, Interaction, Seq, Par, If, While, Scope>;

    Node node;
    NodeId id;
    SourcePos pos;

    bool is_skip() const { return std::holds_alternative<Skip>(node); }
    template <class T> const T* as() const { return std::get_if<T>(&node); }
};

BehaviourPtr make_skip(SourcePos pos = {});
BehaviourPtr make_assign(std::string var, Role role, ExprPtr rhs, SourcePos pos = {});
BehaviourPtr make_interaction(std::string op, Role sender, ExprPtr e, Role receiver, std::string var,
                              SourcePos pos = {});
BehaviourPtr make_seq(BehaviourPtr a, BehaviourPtr b, SourcePos pos = {});
BehaviourPtr make_par(BehaviourPtr a, BehaviourPtr b, SourcePos pos = {});
BehaviourPtr make_if(ExprPtr guard, Role r, BehaviourPtr t, BehaviourPtr e, SourcePos pos = {});
BehaviourPtr make_while(ExprPtr guard, Role r, BehaviourPtr body, SourcePos pos = {});
BehaviourPtr make_scope(Role c, BehaviourPtr body, PropertySet props, SourcePos pos = {});

/// Returns a copy of `b` whose nodes carry pre-order path ids starting at `root`.
BehaviourPtr assign_ids(const BehaviourPtr& b, const NodeId& root);

/// Every role occurring in `b`, including nested scopes and both If branches.
std::set<Role> roles_of(const Behaviour& b);

/// Removes Skip units from Seq/Par; surviving nodes keep their NodeIds.
BehaviourPtr normalize(const BehaviourPtr& b);

/// Source text that reparses to normalize(b).
std::string pretty_print(const Behaviour& b);

/// Structural equality ignoring NodeIds and source positions.
bool structurally_equal(const Behaviour& a, const Behaviour& b);

/// Number of Behaviour nodes.
std::size_t node_count(const Behaviour& b);

/// Visits every node in pre-order.
template <class F> void for_each_node(const Behaviour& b, F&& f)
{
    f(b);
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                for_each_node(*n.first, f);
                for_each_node(*n.second, f);
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                for_each_node(*n.left, f);
                for_each_node(*n.right, f);
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                for_each_node(*n.then_b, f);
                for_each_node(*n.else_b, f);
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                for_each_node(*n.body, f);
            } else if constexpr (std::is_same_v<T, Behaviour::Scope>) {
                for_each_node(*n.body, f);
            }
        },
        b.node);
}

// ---------------------------------------------------------------------------
// Programs and rules

struct Include {
    std::vector<std::string> functions;
    std::string address;
    std::string protocol;  ///< empty when the `with` clause is omitted
    SourcePos pos;
};

struct Preamble {
    std::optional<Role> starter;
    std::map<Role, std::string> locations;
    SourcePos pos;
};

struct Program {
    std::vector<Include> includes;
    Preamble preamble;
    BehaviourPtr body;
};

struct Rule {
    std::vector<Include> includes;
    ExprPtr condition;
    BehaviourPtr body;
    SourcePos pos;
};

Json includes_to_json(const std::vector<Include>& includes);
std::vector<Include> includes_from_json(const Json& j);

}  // namespace chorad
