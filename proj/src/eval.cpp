#include "chorad/eval.hpp"

namespace chorad {

namespace {

const char* type_name(const Value& v)
{
    if (v.is_int()) return "integer";
    if (v.is_bool()) return "boolean";
    return "string";
}

bool as_condition(const Value& v, const char* where)
{
    if (!v.is_bool()) throw EvalError(std::string(where) + " expects a boolean, got " + type_name(v) + " '" + v.render() + "'");
    return v.as_bool();
}

template <class F> std::int64_t checked(F op, std::int64_t a, std::int64_t b)
{
    std::int64_t out = 0;
    if (op(a, b, &out)) throw EvalError("integer overflow");
    return out;
}

Value arithmetic(BinaryOp op, const Value& l, const Value& r)
{
    if (op == BinaryOp::Add && !(l.is_int() && r.is_int())) return Value(l.render() + r.render());
    if (!l.is_int() || !r.is_int())
        throw EvalError(std::string("operator '") + to_string(op) + "' needs integers, got " + type_name(l) + " and " +
                        type_name(r));
    const std::int64_t a = l.as_int(), b = r.as_int();
    switch (op) {
    case BinaryOp::Add: return checked([](auto x, auto y, auto* r) { return __builtin_add_overflow(x, y, r); }, a, b);
    case BinaryOp::Sub: return checked([](auto x, auto y, auto* r) { return __builtin_sub_overflow(x, y, r); }, a, b);
    case BinaryOp::Mul: return checked([](auto x, auto y, auto* r) { return __builtin_mul_overflow(x, y, r); }, a, b);
    case BinaryOp::Div:
        if (b == 0) throw EvalError("division by zero");
        if (a == INT64_MIN && b == -1) throw EvalError("integer overflow");
        return a / b;
    default: break;
    }
    throw EvalError("not an arithmetic operator");
}

Value compare(BinaryOp op, const Value& l, const Value& r)
{
    if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
        const bool same = (l.is_int() == r.is_int() && l.is_bool() == r.is_bool()) ? l == r : l.render() == r.render();
        return Value(op == BinaryOp::Eq ? same : !same);
    }
    int cmp = 0;
    if (l.is_int() && r.is_int()) cmp = l.as_int() < r.as_int() ? -1 : (l.as_int() > r.as_int() ? 1 : 0);
    else if (l.is_string() && r.is_string()) cmp = l.as_string().compare(r.as_string());
    else
        throw EvalError(std::string("cannot order ") + type_name(l) + " and " + type_name(r) + " with '" +
                        to_string(op) + "'");
    switch (op) {
    case BinaryOp::Lt: return Value(cmp < 0);
    case BinaryOp::Gt: return Value(cmp > 0);
    case BinaryOp::Le: return Value(cmp <= 0);
    case BinaryOp::Ge: return Value(cmp >= 0);
    default: break;
    }
    throw EvalError("not a comparison operator");
}

}  // namespace

Value eval_expr(const Expr& e, const VarLookup& lookup, const CallHandler& call)
{
    return std::visit(
        [&](const auto& n) -> Value {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Literal>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                auto v = lookup(n);
                if (!v) throw UnboundVariable("unbound variable '" + (n.ns.empty() ? n.name : n.ns + "." + n.name) + "'");
                return *v;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                return Value(!as_condition(eval_expr(*n.operand, lookup, call), "'!'"));
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                if (n.op == BinaryOp::And || n.op == BinaryOp::Or) {
                    const bool l = as_condition(eval_expr(*n.lhs, lookup, call), to_string(n.op));
                    if (n.op == BinaryOp::And && !l) return Value(false);
                    if (n.op == BinaryOp::Or && l) return Value(true);
                    return Value(as_condition(eval_expr(*n.rhs, lookup, call), to_string(n.op)));
                }
                const Value l = eval_expr(*n.lhs, lookup, call);
                const Value r = eval_expr(*n.rhs, lookup, call);
                switch (n.op) {
                case BinaryOp::Add:
                case BinaryOp::Sub:
                case BinaryOp::Mul:
                case BinaryOp::Div: return arithmetic(n.op, l, r);
                default: return compare(n.op, l, r);
                }
            } else {
                std::vector<Value> args;
                args.reserve(n.args.size());
                for (const auto& a : n.args) args.push_back(eval_expr(*a, lookup, call));
                if (!call) throw EvalError("function call '" + n.function + "' is not allowed here");
                return call(n.function, args);
            }
        },
        e.node);
}

Value eval_expr(const Expr& e, const Store& store, const Role& role, const CallHandler& call)
{
    try {
        return eval_expr(
            e,
            [&](const Expr::Var& v) -> std::optional<Value> {
                if (!v.ns.empty()) return std::nullopt;
                auto it = store.find(v.name);
                if (it == store.end()) return std::nullopt;
                return it->second;
            },
            call);
    } catch (const UnboundVariable& u) {
        throw UnboundVariable(std::string(u.what()) + " at role '" + role + "'");
    }
}

}  // namespace chorad
