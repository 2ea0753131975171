#include "chorad/runtime.hpp"

#include "chorad/eval.hpp"
#include "chorad/parser.hpp"

namespace chorad {

std::shared_ptr<const RoleSetup> make_role_setup(const ProjectedApp& app, const Role& role,
                                                 std::optional<std::vector<std::string>> script)
{
    auto setup = std::make_shared<RoleSetup>();
    setup->role = role;
    setup->starter = app.starter;
    setup->all_roles = app.roles();
    auto it = app.per_role.find(role);
    if (it == app.per_role.end()) throw RuntimeError("role '" + role + "' does not occur in the application");
    setup->code = it->second;
    for (const auto& inc : app.includes)
        for (const auto& fn : inc.functions) setup->function_addresses[fn] = inc.address;
    setup->script = std::move(script);
    return setup;
}

RoleMachine::RoleMachine(std::shared_ptr<const RoleSetup> setup)
    : setup_(std::move(setup)),
      phase_(setup_->role == setup_->starter ? Phase::BarrierWait : Phase::BarrierSend)
{
}

void RoleMachine::fail(const std::string& what) const { throw RuntimeError("role '" + role() + "': " + what); }

// ---------------------------------------------------------------------------
// Enabledness

bool RoleMachine::barrier_enabled() const
{
    if (phase_ == Phase::BarrierSend) return true;
    if (phase_ != Phase::BarrierWait) return false;
    if (role() != setup_->starter) return mailbox_.has(MessageKind::Start, "", setup_->starter);
    for (const auto& r : setup_->all_roles)
        if (r != role() && !mailbox_.has(MessageKind::Ready, "", r)) return false;
    return true;
}

bool RoleMachine::task_enabled(const Task& t) const
{
    if (t.done || t.stack.empty()) return false;
    const Frame& f = t.stack.back();
    using P = ProcessCode;
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, P::LocalAssign> || std::is_same_v<T, P::CallExternal> ||
                          std::is_same_v<T, P::IfLocal>) {
                return true;
            } else if constexpr (std::is_same_v<T, P::SendTo>) {
                return f.pc == 0 || mailbox_.has(MessageKind::Ack, n.op, n.peer);
            } else if constexpr (std::is_same_v<T, P::RecvFrom>) {
                return mailbox_.has(MessageKind::Msg, n.op, n.peer);
            } else if constexpr (std::is_same_v<T, P::IfFollow>) {
                return mailbox_.has(MessageKind::Msg, n.aux_op, n.evaluator);
            } else if constexpr (std::is_same_v<T, P::WhileLocal>) {
                if (f.pc == 0) return true;
                for (const auto& r : n.involved)
                    if (!mailbox_.has(MessageKind::Msg, n.ack_op, r)) return false;
                return true;
            } else if constexpr (std::is_same_v<T, P::WhileFollow>) {
                return f.pc == 1 || mailbox_.has(MessageKind::Msg, n.guard_op, n.evaluator);
            } else if constexpr (std::is_same_v<T, P::ScopeCoord>) {
                if (f.pc == 0) return true;
                for (const auto& r : n.involved)
                    if (!mailbox_.has(MessageKind::Done, n.done_op, r)) return false;
                return true;
            } else if constexpr (std::is_same_v<T, P::ScopeFollow>) {
                return f.pc == 1 || mailbox_.has(MessageKind::Directive, n.directive_op, n.coordinator);
            } else {
                return false;  // Nop/SeqP never rest on top; ParP waits for its children
            }
        },
        f.code->node);
}

std::vector<int> RoleMachine::enabled_tasks() const
{
    if (phase_ == Phase::BarrierSend || phase_ == Phase::BarrierWait) return barrier_enabled() ? std::vector<int>{0}
                                                                                               : std::vector<int>{};
    std::vector<int> out;
    if (phase_ != Phase::Running) return out;
    for (std::size_t i = 0; i < tasks_.size(); ++i)
        if (task_enabled(tasks_[i])) out.push_back(static_cast<int>(i));
    return out;
}

bool RoleMachine::any_enabled() const
{
    if (phase_ == Phase::BarrierSend || phase_ == Phase::BarrierWait) return barrier_enabled();
    if (phase_ != Phase::Running) return false;
    for (const auto& t : tasks_)
        if (task_enabled(t)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Control flow

void RoleMachine::pop(int task) { tasks_[task].stack.pop_back(); }

void RoleMachine::push(int task, CodePtr code) { tasks_[task].stack.push_back(Frame{std::move(code)}); }

void RoleMachine::settle(int idx)
{
    using P = ProcessCode;
    while (true) {
        if (tasks_[idx].stack.empty()) {
            tasks_[idx].done = true;
            const int parent = tasks_[idx].parent;
            if (parent < 0) {
                phase_ = Phase::Finished;
                return;
            }
            if (--tasks_[parent].pending_children > 0) return;
            idx = parent;
            continue;
        }
        Frame& f = tasks_[idx].stack.back();
        const CodePtr code = f.code;
        if (code->is_nop()) {
            pop(idx);
        } else if (const auto* s = code->as<P::SeqP>()) {
            if (static_cast<std::size_t>(f.pc) < s->steps.size()) push(idx, s->steps[f.pc++]);
            else pop(idx);
        } else if (const auto* p = code->as<P::ParP>()) {
            if (f.pc == 0) {
                f.pc = 1;
                // one extra count keeps children that finish at once from resuming the parent early
                tasks_[idx].pending_children = static_cast<int>(p->branches.size()) + 1;
                for (const auto& branch : p->branches) {
                    const int child = static_cast<int>(tasks_.size());
                    tasks_.push_back(Task{{Frame{branch}}, idx, 0, false});
                    settle(child);
                }
                if (--tasks_[idx].pending_children > 0) return;
            }
            if (tasks_[idx].pending_children > 0) return;
            pop(idx);
        } else if ((code->as<P::IfLocal>() || code->as<P::IfFollow>()) && f.pc == 1) {
            pop(idx);
        } else {
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Effects helpers

void RoleMachine::send(Effects& fx, MessageKind kind, const std::string& op, const Role& to, Json data)
{
    Message m;
    m.kind = kind;
    m.op = op;
    m.from = role();
    m.to = to;
    m.data = std::move(data);
    m.seq = ++seq_[static_cast<int>(kind)];
    fx.post(std::move(m));
}

Value RoleMachine::call(const std::string& fn, const std::vector<Value>& args, Effects& fx)
{
    if (fn == "getInput") {
        if (args.size() != 1) fail("getInput takes exactly one argument");
        if (setup_->script) {
            if (script_pos_ >= setup_->script->size())
                fail("input script exhausted at prompt \"" + args[0].render() + "\"");
            return Value((*setup_->script)[script_pos_++]);
        }
        auto line = fx.prompt(role(), args[0].render());
        if (!line) fail("no input available for prompt \"" + args[0].render() + "\"");
        return Value(*line);
    }
    std::string address;
    if (auto it = extra_functions_.find(fn); it != extra_functions_.end()) address = it->second;
    else if (auto jt = setup_->function_addresses.find(fn); jt != setup_->function_addresses.end()) address = jt->second;
    else fail("call to undeclared function '" + fn + "'");
    return fx.call_external(fn, address, args);
}

Value RoleMachine::eval(const ExprPtr& e, Effects& fx)
{
    return eval_expr(*e, store_, role(), [&](const std::string& fn, const std::vector<Value>& args) {
        return call(fn, args, fx);
    });
}

void RoleMachine::add_includes(const std::vector<Include>& includes)
{
    for (const auto& inc : includes)
        for (const auto& fn : inc.functions) extra_functions_[fn] = inc.address;
}

namespace {

bool guard_value(const Value& v, const Role& role)
{
    if (!v.is_bool()) throw RuntimeError("role '" + role + "': guard evaluated to non-boolean '" + v.render() + "'");
    return v.as_bool();
}

bool received_bool(const Message& m, const Role& role)
{
    if (!m.data.is_boolean())
        throw RuntimeError("role '" + role + "': protocol violation, expected a boolean on '" + m.op + "'");
    return m.data.get<bool>();
}

}  // namespace

void RoleMachine::scope_coordinator_enter(int task, const ProcessCode::ScopeCoord& s, Effects& fx)
{
    MatchRequest req{s.scope_id.str(), s.props, store_, role(), s.involved};
    const MatchResponse resp = fx.match_scope(req);
    CodePtr body = s.default_p;
    Json directive = {{"adapt", false}};
    if (resp.match) {
        auto parsed = parse_behaviour(resp.body);
        if (!parsed.ok()) fail("rule '" + resp.rule_id + "' body does not parse: " + parsed.diagnostics.front().message);
        add_includes(resp.includes);
        body = project_rule_body(*parsed.value, s.scope_id, role(), role());
        directive = {{"adapt", true},
                     {"ruleId", resp.rule_id},
                     {"body", resp.body},
                     {"includes", includes_to_json(resp.includes)}};
    }
    for (const auto& r : s.involved) send(fx, MessageKind::Directive, s.directive_op, r, directive);
    applied_.push_back(AppliedRule{s.scope_id.str(), resp.match ? resp.rule_id : std::string()});
    fx.trace({role(), task, "scope", s.directive_op, "", resp.match ? "adapt " + resp.rule_id : "default"});
    tasks_[task].stack.back().pc = 1;
    push(task, body);
}

void RoleMachine::scope_follower_enter(int task, const ProcessCode::ScopeFollow& s, const Message& directive)
{
    CodePtr body = s.default_p;
    if (!directive.data.is_object()) fail("protocol violation, malformed directive on '" + s.directive_op + "'");
    if (directive.data.value("adapt", false)) {
        const std::string source = directive.data.value("body", "");
        auto parsed = parse_behaviour(source);
        if (!parsed.ok()) fail("adapted body does not parse: " + parsed.diagnostics.front().message);
        add_includes(includes_from_json(directive.data.value("includes", Json::array())));
        if (roles_of(**parsed.value).count(role()))
            body = project_rule_body(*parsed.value, s.scope_id, s.coordinator, role());
        else
            body = std::make_shared<const ProcessCode>(ProcessCode{ProcessCode::Nop{}, rule_root(s.scope_id)});
    }
    tasks_[task].stack.back().pc = 1;
    push(task, body);
}

// ---------------------------------------------------------------------------
// Stepping

void RoleMachine::barrier_step(Effects& fx)
{
    if (phase_ == Phase::BarrierSend) {
        send(fx, MessageKind::Ready, "", setup_->starter, nullptr);
        fx.trace({role(), 0, "ready", "", setup_->starter, ""});
        phase_ = Phase::BarrierWait;
        return;
    }
    if (role() == setup_->starter) {
        for (const auto& r : setup_->all_roles)
            if (r != role()) mailbox_.take(MessageKind::Ready, "", r);
        for (const auto& r : setup_->all_roles)
            if (r != role()) send(fx, MessageKind::Start, "", r, nullptr);
        fx.trace({role(), 0, "start", "", "", ""});
    } else {
        mailbox_.take(MessageKind::Start, "", setup_->starter);
        fx.trace({role(), 0, "started", "", setup_->starter, ""});
    }
    phase_ = Phase::Running;
    tasks_.push_back(Task{{Frame{setup_->code}}, -1, 0, false});
    settle(0);
}

void RoleMachine::step(int task, Effects& fx)
{
    if (phase_ == Phase::BarrierSend || phase_ == Phase::BarrierWait) {
        if (!barrier_enabled()) fail("barrier step is not enabled");
        barrier_step(fx);
        return;
    }
    if (task < 0 || static_cast<std::size_t>(task) >= tasks_.size() || !task_enabled(tasks_[task]))
        fail("task " + std::to_string(task) + " is not enabled");

    using P = ProcessCode;
    const Frame frame = tasks_[task].stack.back();
    const CodePtr code = frame.code;
    auto top = [&]() -> Frame& { return tasks_[task].stack.back(); };

    try {
        if (const auto* n = code->as<P::LocalAssign>()) {
            Value v = eval(n->expr, fx);
            fx.trace({role(), task, "assign", "", "", n->var + "=" + v.render()});
            store_[n->var] = std::move(v);
            pop(task);
            settle(task);
        } else if (const auto* c = code->as<P::CallExternal>()) {
            std::vector<Value> args;
            for (const auto& a : c->args) args.push_back(eval(a, fx));
            Value v = call(c->function, args, fx);
            fx.trace({role(), task, "call", c->function, "", c->result_var + "=" + v.render()});
            store_[c->result_var] = std::move(v);
            pop(task);
            settle(task);
        } else if (const auto* s = code->as<P::SendTo>()) {
            if (frame.pc == 0) {
                const Value v = eval(s->expr, fx);
                send(fx, MessageKind::Msg, s->op, s->peer, v.to_json());
                top().seq = seq_[static_cast<int>(MessageKind::Msg)];
                top().pc = 1;
                fx.trace({role(), task, "send", s->op, s->peer, v.render()});
            } else {
                const Message ack = *mailbox_.take(MessageKind::Ack, s->op, s->peer);
                if (ack.seq != frame.seq)
                    fail("protocol violation, ack for '" + s->op + "' carries seq " + std::to_string(ack.seq) +
                         ", expected " + std::to_string(frame.seq));
                fx.trace({role(), task, "acked", s->op, s->peer, ""});
                pop(task);
                settle(task);
            }
        } else if (const auto* r = code->as<P::RecvFrom>()) {
            const Message m = *mailbox_.take(MessageKind::Msg, r->op, r->peer);
            Value v = Value::from_json(m.data);
            fx.trace({role(), task, "recv", r->op, r->peer, r->var + "=" + v.render()});
            store_[r->var] = std::move(v);
            Message ack;
            ack.kind = MessageKind::Ack;
            ack.op = r->op;
            ack.from = role();
            ack.to = r->peer;
            ack.seq = m.seq;
            fx.post(std::move(ack));
            pop(task);
            settle(task);
        } else if (const auto* i = code->as<P::IfLocal>()) {
            const bool g = guard_value(eval(i->guard, fx), role());
            for (const auto& peer : i->involved) send(fx, MessageKind::Msg, i->aux_op, peer, g);
            fx.trace({role(), task, "if", i->aux_op, "", g ? "then" : "else"});
            top().pc = 1;
            push(task, g ? i->then_p : i->else_p);
            settle(task);
        } else if (const auto* i = code->as<P::IfFollow>()) {
            const bool g = received_bool(*mailbox_.take(MessageKind::Msg, i->aux_op, i->evaluator), role());
            fx.trace({role(), task, "if-follow", i->aux_op, i->evaluator, g ? "then" : "else"});
            top().pc = 1;
            push(task, g ? i->then_p : i->else_p);
            settle(task);
        } else if (const auto* w = code->as<P::WhileLocal>()) {
            if (frame.pc == 0) {
                const bool g = guard_value(eval(w->guard, fx), role());
                for (const auto& peer : w->involved) send(fx, MessageKind::Msg, w->guard_op, peer, g);
                fx.trace({role(), task, "while", w->guard_op, "", g ? "iterate" : "exit"});
                if (g) {
                    top().pc = 1;
                    push(task, w->body);
                } else {
                    pop(task);
                }
                settle(task);
            } else {
                for (const auto& peer : w->involved) mailbox_.take(MessageKind::Msg, w->ack_op, peer);
                fx.trace({role(), task, "while-acks", w->ack_op, "", ""});
                top().pc = 0;
            }
        } else if (const auto* w = code->as<P::WhileFollow>()) {
            if (frame.pc == 0) {
                const bool g = received_bool(*mailbox_.take(MessageKind::Msg, w->guard_op, w->evaluator), role());
                fx.trace({role(), task, "while-follow", w->guard_op, w->evaluator, g ? "iterate" : "exit"});
                if (g) {
                    top().pc = 1;
                    push(task, w->body);
                } else {
                    pop(task);
                }
                settle(task);
            } else {
                send(fx, MessageKind::Msg, w->ack_op, w->evaluator, true);
                fx.trace({role(), task, "iteration-ack", w->ack_op, w->evaluator, ""});
                top().pc = 0;
            }
        } else if (const auto* sc = code->as<P::ScopeCoord>()) {
            if (frame.pc == 0) {
                scope_coordinator_enter(task, *sc, fx);
            } else {
                for (const auto& peer : sc->involved) mailbox_.take(MessageKind::Done, sc->done_op, peer);
                fx.trace({role(), task, "scope-end", sc->done_op, "", ""});
                pop(task);
            }
            settle(task);
        } else if (const auto* sf = code->as<P::ScopeFollow>()) {
            if (frame.pc == 0) {
                const Message d = *mailbox_.take(MessageKind::Directive, sf->directive_op, sf->coordinator);
                fx.trace({role(), task, "directive", sf->directive_op, sf->coordinator,
                          d.data.value("adapt", false) ? "adapt " + d.data.value("ruleId", "") : "default"});
                scope_follower_enter(task, *sf, d);
            } else {
                send(fx, MessageKind::Done, sf->done_op, sf->coordinator, nullptr);
                fx.trace({role(), task, "done", sf->done_op, sf->coordinator, ""});
                pop(task);
            }
            settle(task);
        } else {
            fail("internal error: unexpected code on top of task " + std::to_string(task));
        }
    } catch (const EvalError& e) {
        fail(e.what());
    } catch (const ProjectionError& e) {
        fail(e.what());
    }
}

// ---------------------------------------------------------------------------

std::vector<std::string> RoleMachine::blocked_on() const
{
    std::vector<std::string> out;
    if (phase_ == Phase::BarrierWait)
        out.push_back(role() == setup_->starter ? "waiting for ready from all roles" : "waiting for start");
    if (phase_ != Phase::Running) return out;
    using P = ProcessCode;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const Task& t = tasks_[i];
        if (t.done || t.stack.empty()) continue;
        const Frame& f = t.stack.back();
        std::string what;
        if (const auto* r = f.code->as<P::RecvFrom>()) what = "recv " + r->op + " from " + r->peer;
        else if (const auto* s = f.code->as<P::SendTo>()) what = "ack of " + s->op + " from " + s->peer;
        else if (const auto* i = f.code->as<P::IfFollow>()) what = "guard " + i->aux_op + " from " + i->evaluator;
        else if (const auto* w = f.code->as<P::WhileFollow>()) what = "guard " + w->guard_op + " from " + w->evaluator;
        else if (const auto* w = f.code->as<P::WhileLocal>()) what = "iteration acks on " + w->ack_op;
        else if (const auto* c = f.code->as<P::ScopeCoord>()) what = "done on " + c->done_op;
        else if (const auto* d = f.code->as<P::ScopeFollow>()) what = "directive " + d->directive_op + " from " + d->coordinator;
        else if (f.code->as<P::ParP>()) continue;
        else what = "runnable";
        out.push_back("task " + std::to_string(i) + ": " + what);
    }
    return out;
}

std::string RoleMachine::digest() const
{
    std::string s = role() + "#" + std::to_string(static_cast<int>(phase_)) + "#" + std::to_string(script_pos_) + "#";
    for (const auto& [k, v] : store_) s += k + "=" + v.literal() + ",";
    s += "#" + mailbox_.digest() + "#";
    for (const auto& t : tasks_) {
        s += t.done ? "D" : "T";
        s += std::to_string(t.pending_children) + "[";
        for (const auto& f : t.stack)
            s += f.code->origin.str() + ":" + std::to_string(f.code->node.index()) + ":" + std::to_string(f.pc) + ";";
        s += "]";
    }
    s += "#" + std::to_string(applied_.size());
    return s;
}

}  // namespace chorad
