#include "chorad/ast.hpp"

#include <sstream>

namespace chorad {

NodeId NodeId::child(int index) const
{
    NodeId c{path};
    c.path.push_back(index);
    return c;
}

std::string NodeId::str() const
{
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out.push_back('_');
        out += std::to_string(path[i]);
    }
    return out;
}

const char* to_string(BinaryOp op)
{
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Expressions

ExprPtr make_literal(Value v, SourcePos pos)
{
    return std::make_shared<const Expr>(Expr{Expr::Literal{std::move(v)}, pos});
}

ExprPtr make_var(std::string name, std::string ns, SourcePos pos)
{
    return std::make_shared<const Expr>(Expr{Expr::Var{std::move(ns), std::move(name)}, pos});
}

ExprPtr make_not(ExprPtr e, SourcePos pos)
{
    return std::make_shared<const Expr>(Expr{Expr::Unary{UnaryOp::Not, std::move(e)}, pos});
}

ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos)
{
    return std::make_shared<const Expr>(Expr{Expr::Binary{op, std::move(lhs), std::move(rhs)}, pos});
}

ExprPtr make_call(std::string fn, std::vector<ExprPtr> args, SourcePos pos)
{
    return std::make_shared<const Expr>(Expr{Expr::Call{std::move(fn), std::move(args)}, pos});
}

namespace {

int precedence(BinaryOp op)
{
    switch (op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Gt:
    case BinaryOp::Le:
    case BinaryOp::Ge: return 3;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 4;
    case BinaryOp::Mul:
    case BinaryOp::Div: return 5;
    }
    return 0;
}

constexpr int kUnaryPrecedence = 6;
constexpr int kAtomPrecedence = 7;

int precedence(const Expr& e)
{
    if (const auto* b = std::get_if<Expr::Binary>(&e.node)) return precedence(b->op);
    if (std::holds_alternative<Expr::Unary>(e.node)) return kUnaryPrecedence;
    return kAtomPrecedence;
}

std::string print_expr(const Expr& e);

std::string wrap(const Expr& e, int min_prec)
{
    std::string s = print_expr(e);
    if (precedence(e) < min_prec) return "(" + s + ")";
    return s;
}

std::string print_expr(const Expr& e)
{
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Literal>) {
                return n.value.literal();
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                return n.ns.empty() ? n.name : n.ns + "." + n.name;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                return "!" + wrap(*n.operand, kUnaryPrecedence);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                const int p = precedence(n.op);
                // left-associative: the right operand needs a strictly tighter binding
                return wrap(*n.lhs, p) + " " + to_string(n.op) + " " + wrap(*n.rhs, p + 1);
            } else {
                std::string s = n.function + "(";
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i) s += ", ";
                    s += print_expr(*n.args[i]);
                }
                return s + ")";
            }
        },
        e.node);
}

void collect_vars(const Expr& e, std::vector<Expr::Var>& out, std::vector<std::string>* calls)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Var>) {
                out.push_back(n);
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                collect_vars(*n.operand, out, calls);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                collect_vars(*n.lhs, out, calls);
                collect_vars(*n.rhs, out, calls);
            } else if constexpr (std::is_same_v<T, Expr::Call>) {
                if (calls) calls->push_back(n.function);
                for (const auto& a : n.args) collect_vars(*a, out, calls);
            }
        },
        e.node);
}

}  // namespace

std::string pretty_print(const Expr& e) { return print_expr(e); }

bool structurally_equal(const Expr& a, const Expr& b)
{
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Expr::Literal>) {
                return x.value == y.value;
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                return x.ns == y.ns && x.name == y.name;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                return x.op == y.op && structurally_equal(*x.operand, *y.operand);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
            } else {
                if (x.function != y.function || x.args.size() != y.args.size()) return false;
                for (std::size_t i = 0; i < x.args.size(); ++i)
                    if (!structurally_equal(*x.args[i], *y.args[i])) return false;
                return true;
            }
        },
        a.node);
}

std::vector<Expr::Var> vars_of(const Expr& e)
{
    std::vector<Expr::Var> out;
    collect_vars(e, out, nullptr);
    return out;
}

std::vector<std::string> calls_of(const Expr& e)
{
    std::vector<Expr::Var> vars;
    std::vector<std::string> calls;
    collect_vars(e, vars, &calls);
    return calls;
}

// ---------------------------------------------------------------------------
// Behaviours

namespace {

BehaviourPtr make_node(Behaviour::Node node, SourcePos pos, NodeId id = {})
{
    return std::make_shared<const Behaviour>(Behaviour{std::move(node), std::move(id), pos});
}

}  // namespace

BehaviourPtr make_skip(SourcePos pos) { return make_node(Behaviour::Skip{}, pos); }

BehaviourPtr make_assign(std::string var, Role role, ExprPtr rhs, SourcePos pos)
{
    return make_node(Behaviour::Assign{std::move(var), std::move(role), std::move(rhs)}, pos);
}

BehaviourPtr make_interaction(std::string op, Role sender, ExprPtr e, Role receiver, std::string var, SourcePos pos)
{
    return make_node(
        Behaviour::Interaction{std::move(op), std::move(sender), std::move(e), std::move(receiver), std::move(var)},
        pos);
}

BehaviourPtr make_seq(BehaviourPtr a, BehaviourPtr b, SourcePos pos)
{
    return make_node(Behaviour::Seq{std::move(a), std::move(b)}, pos);
}

BehaviourPtr make_par(BehaviourPtr a, BehaviourPtr b, SourcePos pos)
{
    return make_node(Behaviour::Par{std::move(a), std::move(b)}, pos);
}

BehaviourPtr make_if(ExprPtr guard, Role r, BehaviourPtr t, BehaviourPtr e, SourcePos pos)
{
    if (!e) e = make_skip(pos);
    return make_node(Behaviour::If{std::move(guard), std::move(r), std::move(t), std::move(e)}, pos);
}

BehaviourPtr make_while(ExprPtr guard, Role r, BehaviourPtr body, SourcePos pos)
{
    return make_node(Behaviour::While{std::move(guard), std::move(r), std::move(body)}, pos);
}

BehaviourPtr make_scope(Role c, BehaviourPtr body, PropertySet props, SourcePos pos)
{
    return make_node(Behaviour::Scope{std::move(c), std::move(body), std::move(props)}, pos);
}

BehaviourPtr assign_ids(const BehaviourPtr& b, const NodeId& root)
{
    Behaviour::Node node = std::visit(
        [&](const auto& n) -> Behaviour::Node {
            using T = std::decay_t<decltype(n)>;
            T copy = n;
            if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                copy.first = assign_ids(n.first, root.child(0));
                copy.second = assign_ids(n.second, root.child(1));
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                copy.left = assign_ids(n.left, root.child(0));
                copy.right = assign_ids(n.right, root.child(1));
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                copy.then_b = assign_ids(n.then_b, root.child(0));
                copy.else_b = assign_ids(n.else_b, root.child(1));
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                copy.body = assign_ids(n.body, root.child(0));
            } else if constexpr (std::is_same_v<T, Behaviour::Scope>) {
                copy.body = assign_ids(n.body, root.child(0));
            }
            return copy;
        },
        b->node);
    return make_node(std::move(node), b->pos, root);
}

std::set<Role> roles_of(const Behaviour& b)
{
    std::set<Role> roles;
    for_each_node(b, [&](const Behaviour& n) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Behaviour::Assign>) {
                    roles.insert(x.role);
                } else if constexpr (std::is_same_v<T, Behaviour::Interaction>) {
                    roles.insert(x.sender);
                    roles.insert(x.receiver);
                } else if constexpr (std::is_same_v<T, Behaviour::If> || std::is_same_v<T, Behaviour::While>) {
                    roles.insert(x.evaluator);
                } else if constexpr (std::is_same_v<T, Behaviour::Scope>) {
                    roles.insert(x.coordinator);
                }
            },
            n.node);
    });
    return roles;
}

BehaviourPtr normalize(const BehaviourPtr& b)
{
    return std::visit(
        [&](const auto& n) -> BehaviourPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Seq> || std::is_same_v<T, Behaviour::Par>) {
                BehaviourPtr l, r;
                if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                    l = normalize(n.first);
                    r = normalize(n.second);
                } else {
                    l = normalize(n.left);
                    r = normalize(n.right);
                }
                if (l->is_skip()) return r;
                if (r->is_skip()) return l;
                return make_node(T{l, r}, b->pos, b->id);
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                return make_node(Behaviour::If{n.guard, n.evaluator, normalize(n.then_b), normalize(n.else_b)}, b->pos,
                                 b->id);
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                return make_node(Behaviour::While{n.guard, n.evaluator, normalize(n.body)}, b->pos, b->id);
            } else if constexpr (std::is_same_v<T, Behaviour::Scope>) {
                return make_node(Behaviour::Scope{n.coordinator, normalize(n.body), n.props}, b->pos, b->id);
            } else {
                return b;
            }
        },
        b->node);
}

namespace {

std::string print_par_level(const Behaviour& b);

std::string block(const Behaviour& b) { return "{ " + print_par_level(b) + " }"; }

std::string print_stmt(const Behaviour& b)
{
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Skip>) {
                return "skip";
            } else if constexpr (std::is_same_v<T, Behaviour::Assign>) {
                return n.var + "@" + n.role + " = " + pretty_print(*n.rhs);
            } else if constexpr (std::is_same_v<T, Behaviour::Interaction>) {
                return n.op + ": " + n.sender + "( " + pretty_print(*n.send_expr) + " ) -> " + n.receiver + "( " +
                       n.recv_var + " )";
            } else if constexpr (std::is_same_v<T, Behaviour::Seq> || std::is_same_v<T, Behaviour::Par>) {
                return block(b);
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                std::string s = "if ( " + pretty_print(*n.guard) + " )@" + n.evaluator + " " + block(*n.then_b);
                if (!n.else_b->is_skip()) s += " else " + block(*n.else_b);
                return s;
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                return "while ( " + pretty_print(*n.guard) + " )@" + n.evaluator + " " + block(*n.body);
            } else {
                std::string s = "scope @" + n.coordinator + " " + block(*n.body);
                if (!n.props.empty()) {
                    s += " prop { ";
                    bool first = true;
                    for (const auto& [k, v] : n.props) {
                        if (!first) s += ", ";
                        first = false;
                        s += "N." + k + " = " + v.literal();
                    }
                    s += " }";
                }
                return s;
            }
        },
        b.node);
}

// `;` binds tighter than `|`; chains are right-nested, so only left operands need braces.
std::string print_seq_level(const Behaviour& b)
{
    if (const auto* s = b.as<Behaviour::Seq>()) return print_stmt(*s->first) + "; " + print_seq_level(*s->second);
    return print_stmt(b);
}

std::string print_par_level(const Behaviour& b)
{
    if (const auto* p = b.as<Behaviour::Par>()) {
        const std::string left = p->left->as<Behaviour::Par>() ? block(*p->left) : print_seq_level(*p->left);
        return left + " | " + print_par_level(*p->right);
    }
    return print_seq_level(b);
}

}  // namespace

std::string pretty_print(const Behaviour& b) { return print_par_level(*normalize(std::make_shared<Behaviour>(b))); }

bool structurally_equal(const Behaviour& a, const Behaviour& b)
{
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Behaviour::Skip>) {
                return true;
            } else if constexpr (std::is_same_v<T, Behaviour::Assign>) {
                return x.var == y.var && x.role == y.role && structurally_equal(*x.rhs, *y.rhs);
            } else if constexpr (std::is_same_v<T, Behaviour::Interaction>) {
                return x.op == y.op && x.sender == y.sender && x.receiver == y.receiver && x.recv_var == y.recv_var &&
                       structurally_equal(*x.send_expr, *y.send_expr);
            } else if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                return structurally_equal(*x.first, *y.first) && structurally_equal(*x.second, *y.second);
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                return structurally_equal(*x.left, *y.left) && structurally_equal(*x.right, *y.right);
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                return x.evaluator == y.evaluator && structurally_equal(*x.guard, *y.guard) &&
                       structurally_equal(*x.then_b, *y.then_b) && structurally_equal(*x.else_b, *y.else_b);
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                return x.evaluator == y.evaluator && structurally_equal(*x.guard, *y.guard) &&
                       structurally_equal(*x.body, *y.body);
            } else {
                return x.coordinator == y.coordinator && x.props == y.props && structurally_equal(*x.body, *y.body);
            }
        },
        a.node);
}

std::size_t node_count(const Behaviour& b)
{
    std::size_t n = 0;
    for_each_node(b, [&](const Behaviour&) { ++n; });
    return n;
}

Json includes_to_json(const std::vector<Include>& includes)
{
    Json arr = Json::array();
    for (const auto& inc : includes)
        arr.push_back({{"functions", inc.functions}, {"address", inc.address}, {"protocol", inc.protocol}});
    return arr;
}

std::vector<Include> includes_from_json(const Json& j)
{
    std::vector<Include> out;
    if (!j.is_array()) return out;
    for (const auto& e : j) {
        Include inc;
        inc.functions = e.value("functions", std::vector<std::string>{});
        inc.address = e.value("address", "");
        inc.protocol = e.value("protocol", "");
        out.push_back(std::move(inc));
    }
    return out;
}

}  // namespace chorad
