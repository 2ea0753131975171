#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chorad/ast.hpp"

namespace chorad {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnboundVariable : public EvalError {
public:
    using EvalError::EvalError;
};

using VarLookup = std::function<std::optional<Value>(const Expr::Var&)>;
using CallHandler = std::function<Value(const std::string& fn, const std::vector<Value>& args)>;

/// `+` adds integers and concatenates rendered operands otherwise; `==`/`!=`
/// across unlike types compare rendered text; ordering needs like types;
/// `and`/`or` short-circuit.
Value eval_expr(const Expr& e, const VarLookup& lookup, const CallHandler& call);

/// Evaluates against a role store; unbound reads name the variable and role.
Value eval_expr(const Expr& e, const Store& store, const Role& role, const CallHandler& call);

}  // namespace chorad
