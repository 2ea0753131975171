#include "chorad/project.hpp"

#include "chorad/check.hpp"

namespace chorad {

const char* to_string(AuxPurpose p)
{
    switch (p) {
    case AuxPurpose::Guard: return "guard";
    case AuxPurpose::Ack: return "ack";
    case AuxPurpose::Directive: return "directive";
    case AuxPurpose::Done: return "done";
    }
    return "?";
}

std::string aux_op_name(const NodeId& id, AuxPurpose purpose)
{
    return std::string("_aux_") + to_string(purpose) + "_" + id.str();
}

bool is_aux_op(const std::string& op) { return op.rfind("_aux_", 0) == 0; }

NodeId rule_root(const NodeId& scope_id) { return scope_id.child(1); }

std::vector<Role> ProjectedApp::roles() const
{
    std::vector<Role> out;
    for (const auto& [r, _] : per_role) out.push_back(r);
    return out;
}

namespace {

CodePtr make_code(ProcessCode::Node node, const NodeId& origin)
{
    return std::make_shared<const ProcessCode>(ProcessCode{std::move(node), origin});
}

CodePtr nop(const NodeId& origin) { return make_code(ProcessCode::Nop{}, origin); }

// Flattens nested sequences and drops Nops.
CodePtr make_seq(std::vector<CodePtr> parts, const NodeId& origin)
{
    std::vector<CodePtr> steps;
    for (auto& p : parts) {
        if (p->is_nop()) continue;
        if (const auto* s = p->as<ProcessCode::SeqP>()) steps.insert(steps.end(), s->steps.begin(), s->steps.end());
        else steps.push_back(std::move(p));
    }
    if (steps.empty()) return nop(origin);
    if (steps.size() == 1) return steps.front();
    return make_code(ProcessCode::SeqP{std::move(steps)}, origin);
}

CodePtr make_par(std::vector<CodePtr> parts, const NodeId& origin)
{
    std::vector<CodePtr> branches;
    for (auto& p : parts) {
        if (p->is_nop()) continue;
        if (const auto* q = p->as<ProcessCode::ParP>())
            branches.insert(branches.end(), q->branches.begin(), q->branches.end());
        else branches.push_back(std::move(p));
    }
    if (branches.empty()) return nop(origin);
    if (branches.size() == 1) return branches.front();
    return make_code(ProcessCode::ParP{std::move(branches)}, origin);
}

std::vector<Role> others(const Behaviour& b, const Role& lead)
{
    std::vector<Role> out;
    for (const auto& r : roles_of(b))
        if (r != lead) out.push_back(r);
    return out;
}

bool contains(const std::vector<Role>& v, const Role& r) { return std::find(v.begin(), v.end(), r) != v.end(); }

}  // namespace

CodePtr project_behaviour(const Behaviour& b, const Role& role)
{
    const NodeId& id = b.id;
    return std::visit(
        [&](const auto& n) -> CodePtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Skip>) {
                return nop(id);
            } else if constexpr (std::is_same_v<T, Behaviour::Assign>) {
                if (n.role != role) return nop(id);
                if (const auto* call = std::get_if<Expr::Call>(&n.rhs->node); call && call->function != "getInput")
                    return make_code(ProcessCode::CallExternal{call->function, call->args, n.var}, id);
                return make_code(ProcessCode::LocalAssign{n.var, n.rhs}, id);
            } else if constexpr (std::is_same_v<T, Behaviour::Interaction>) {
                if (n.sender == role) return make_code(ProcessCode::SendTo{n.op, n.receiver, n.send_expr}, id);
                if (n.receiver == role) return make_code(ProcessCode::RecvFrom{n.op, n.sender, n.recv_var}, id);
                return nop(id);
            } else if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                return make_seq({project_behaviour(*n.first, role), project_behaviour(*n.second, role)}, id);
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                return make_par({project_behaviour(*n.left, role), project_behaviour(*n.right, role)}, id);
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                const auto involved = others(b, n.evaluator);
                const std::string aux = aux_op_name(id, AuxPurpose::Guard);
                if (role == n.evaluator)
                    return make_code(ProcessCode::IfLocal{n.guard, involved, aux, project_behaviour(*n.then_b, role),
                                                          project_behaviour(*n.else_b, role)},
                                     id);
                if (contains(involved, role))
                    return make_code(ProcessCode::IfFollow{aux, n.evaluator, project_behaviour(*n.then_b, role),
                                                           project_behaviour(*n.else_b, role)},
                                     id);
                return nop(id);
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                const auto involved = others(b, n.evaluator);
                const std::string guard = aux_op_name(id, AuxPurpose::Guard);
                const std::string ack = aux_op_name(id, AuxPurpose::Ack);
                if (role == n.evaluator)
                    return make_code(
                        ProcessCode::WhileLocal{n.guard, involved, guard, ack, project_behaviour(*n.body, role)}, id);
                if (contains(involved, role))
                    return make_code(ProcessCode::WhileFollow{guard, ack, n.evaluator, project_behaviour(*n.body, role)},
                                     id);
                return nop(id);
            } else {
                const auto involved = others(b, n.coordinator);
                const std::string directive = aux_op_name(id, AuxPurpose::Directive);
                const std::string done = aux_op_name(id, AuxPurpose::Done);
                if (role == n.coordinator)
                    return make_code(ProcessCode::ScopeCoord{id, n.props, involved, directive, done,
                                                             pretty_print(*n.body), project_behaviour(*n.body, role)},
                                     id);
                if (contains(involved, role))
                    return make_code(ProcessCode::ScopeFollow{id, n.coordinator, directive, done,
                                                              project_behaviour(*n.body, role)},
                                     id);
                return nop(id);
            }
        },
        b.node);
}

ProjectedApp project(const Program& p, bool require_connected)
{
    const auto violations = require_connected ? check_program(p) : validate_program(p);
    if (has_errors(violations)) {
        for (const auto& v : violations)
            if (v.severity == Severity::Error)
                throw ProjectionError("cannot project: " + format_violation("program", v));
    }
    const BehaviourPtr body = normalize(p.body);
    ProjectedApp app;
    app.starter = *p.preamble.starter;
    app.includes = p.includes;
    app.locations = p.preamble.locations;
    std::set<Role> roles = roles_of(*body);
    roles.insert(app.starter);
    for (const auto& r : roles) app.per_role[r] = project_behaviour(*body, r);
    int index = 0;
    for (const auto& r : roles) {
        if (!app.locations.count(r)) app.locations[r] = "socket://localhost:" + std::to_string(kFirstAutoPort + index);
        ++index;
    }
    for_each_node(*body, [&](const Behaviour& n) {
        if (const auto* s = n.as<Behaviour::Scope>())
            app.scope_table[n.id] = ScopeInfo{s->coordinator, others(n, s->coordinator), s->props,
                                              pretty_print(*s->body)};
    });
    return app;
}

CodePtr project_rule_body(const BehaviourPtr& body, const NodeId& scope_id, const Role& coordinator,
                          const Role& target)
{
    const BehaviourPtr rooted = normalize(assign_ids(body, rule_root(scope_id)));
    const auto roles = roles_of(*rooted);
    if (!roles.count(target) && target != coordinator)
        throw ProjectionError("role '" + target + "' takes no part in the rule body for scope " + scope_id.str());
    return project_behaviour(*rooted, target);
}

// ---------------------------------------------------------------------------

namespace {

Json expr_json(const ExprPtr& e) { return pretty_print(*e); }

Json roles_json(const std::vector<Role>& rs) { return Json(rs); }

}  // namespace

Json to_json(const ProcessCode& code)
{
    Json j = std::visit(
        [&](const auto& n) -> Json {
            using T = std::decay_t<decltype(n)>;
            using P = ProcessCode;
            if constexpr (std::is_same_v<T, P::Nop>) {
                return {{"type", "Nop"}};
            } else if constexpr (std::is_same_v<T, P::LocalAssign>) {
                return {{"type", "LocalAssign"}, {"var", n.var}, {"expr", expr_json(n.expr)}};
            } else if constexpr (std::is_same_v<T, P::CallExternal>) {
                Json args = Json::array();
                for (const auto& a : n.args) args.push_back(expr_json(a));
                return {{"type", "CallExternal"}, {"function", n.function}, {"args", args}, {"result", n.result_var}};
            } else if constexpr (std::is_same_v<T, P::SendTo>) {
                return {{"type", "SendTo"}, {"op", n.op}, {"peer", n.peer}, {"expr", expr_json(n.expr)}};
            } else if constexpr (std::is_same_v<T, P::RecvFrom>) {
                return {{"type", "RecvFrom"}, {"op", n.op}, {"peer", n.peer}, {"var", n.var}};
            } else if constexpr (std::is_same_v<T, P::SeqP>) {
                Json steps = Json::array();
                for (const auto& s : n.steps) steps.push_back(to_json(*s));
                return {{"type", "SeqP"}, {"steps", steps}};
            } else if constexpr (std::is_same_v<T, P::ParP>) {
                Json branches = Json::array();
                for (const auto& s : n.branches) branches.push_back(to_json(*s));
                return {{"type", "ParP"}, {"branches", branches}};
            } else if constexpr (std::is_same_v<T, P::IfLocal>) {
                return {{"type", "IfLocal"},          {"guard", expr_json(n.guard)}, {"involved", roles_json(n.involved)},
                        {"auxOp", n.aux_op},          {"then", to_json(*n.then_p)},  {"else", to_json(*n.else_p)}};
            } else if constexpr (std::is_same_v<T, P::IfFollow>) {
                return {{"type", "IfFollow"},
                        {"auxOp", n.aux_op},
                        {"evaluator", n.evaluator},
                        {"then", to_json(*n.then_p)},
                        {"else", to_json(*n.else_p)}};
            } else if constexpr (std::is_same_v<T, P::WhileLocal>) {
                return {{"type", "WhileLocal"},
                        {"guard", expr_json(n.guard)},
                        {"involved", roles_json(n.involved)},
                        {"guardOp", n.guard_op},
                        {"ackOp", n.ack_op},
                        {"body", to_json(*n.body)}};
            } else if constexpr (std::is_same_v<T, P::WhileFollow>) {
                return {{"type", "WhileFollow"},
                        {"guardOp", n.guard_op},
                        {"ackOp", n.ack_op},
                        {"evaluator", n.evaluator},
                        {"body", to_json(*n.body)}};
            } else if constexpr (std::is_same_v<T, P::ScopeCoord>) {
                return {{"type", "ScopeCoord"},
                        {"scopeId", n.scope_id.str()},
                        {"props", store_to_json(n.props)},
                        {"involved", roles_json(n.involved)},
                        {"directiveOp", n.directive_op},
                        {"doneOp", n.done_op},
                        {"defaultSource", n.default_source},
                        {"default", to_json(*n.default_p)}};
            } else {
                return {{"type", "ScopeFollow"},
                        {"scopeId", n.scope_id.str()},
                        {"coordinator", n.coordinator},
                        {"directiveOp", n.directive_op},
                        {"doneOp", n.done_op},
                        {"default", to_json(*n.default_p)}};
            }
        },
        code.node);
    j["origin"] = code.origin.str();
    return j;
}

Json to_json(const ProjectedApp& app)
{
    Json roles = Json::object();
    for (const auto& [r, code] : app.per_role) roles[r] = to_json(*code);
    Json scopes = Json::object();
    for (const auto& [id, info] : app.scope_table)
        scopes[id.str()] = {{"coordinator", info.coordinator},
                            {"involved", info.involved},
                            {"props", store_to_json(info.props)},
                            {"body", info.body_source}};
    return {{"starter", app.starter},
            {"includes", includes_to_json(app.includes)},
            {"locations", app.locations},
            {"roles", roles},
            {"scopes", scopes}};
}

}  // namespace chorad
