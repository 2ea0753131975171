#include "chorad/check.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace chorad {

const char* to_string(ViolationKind k)
{
    switch (k) {
    case ViolationKind::Sequence: return "sequence";
    case ViolationKind::Parallel: return "parallel";
    case ViolationKind::Role: return "role";
    case ViolationKind::Name: return "name";
    }
    return "?";
}

std::string format_violation(const std::string& file, const Violation& v)
{
    std::string kind = to_string(v.kind);
    if (v.severity == Severity::Warning) kind += " warning";
    return file + ":" + std::to_string(v.pos.line) + ":" + std::to_string(v.pos.column) + ": " + kind + ": " +
           v.message;
}

bool EventSignature::shares_role_with(const EventSignature& other) const
{
    for (const auto& r : roles)
        if (std::find(other.roles.begin(), other.roles.end(), r) != other.roles.end()) return true;
    return false;
}

bool has_errors(const std::vector<Violation>& vs)
{
    return std::any_of(vs.begin(), vs.end(), [](const Violation& v) { return v.severity == Severity::Error; });
}

namespace {

using Events = std::vector<EventSignature>;

void add_unique(Events& out, EventSignature e)
{
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(std::move(e));
}

void append(Events& out, const Events& in)
{
    for (const auto& e : in) add_unique(out, e);
}

EventSignature closing_event(const Role& lead, const Behaviour& construct)
{
    EventSignature e{{lead}, construct.id, construct.pos};
    for (const auto& r : roles_of(construct))
        if (r != lead) e.roles.push_back(r);
    return e;
}

std::string describe(const Behaviour& b)
{
    std::string s;
    if (const auto* i = b.as<Behaviour::If>()) s = "if ( " + pretty_print(*i->guard) + " )@" + i->evaluator;
    else if (const auto* w = b.as<Behaviour::While>()) s = "while ( " + pretty_print(*w->guard) + " )@" + w->evaluator;
    else if (const auto* sc = b.as<Behaviour::Scope>()) s = "scope @" + sc->coordinator;
    else s = pretty_print(b);
    constexpr std::size_t kMax = 60;
    if (s.size() > kMax) s = s.substr(0, kMax - 3) + "...";
    return s;
}

const Behaviour* find_node(const Behaviour& root, const NodeId& id)
{
    const Behaviour* found = nullptr;
    for_each_node(root, [&](const Behaviour& n) {
        if (!found && n.id == id) found = &n;
    });
    return found;
}

std::string roles_str(const std::vector<Role>& roles)
{
    std::string s = "{";
    for (std::size_t i = 0; i < roles.size(); ++i) s += (i ? ", " : "") + roles[i];
    return s + "}";
}

using InteractionKey = std::tuple<std::string, Role, Role>;

void interaction_keys(const Behaviour& b, std::map<InteractionKey, const Behaviour*>& out)
{
    for_each_node(b, [&](const Behaviour& n) {
        if (const auto* i = n.as<Behaviour::Interaction>()) out.emplace(InteractionKey{i->op, i->sender, i->receiver}, &n);
    });
}

void check_rec(const Behaviour& root, const Behaviour& b, std::vector<Violation>& out)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                check_rec(root, *n.first, out);
                check_rec(root, *n.second, out);
                const Events finals = trans_final(*n.first);
                const Events initials = trans_initial(*n.second);
                if (finals.empty() || initials.empty()) return;
                for (const auto& f : finals)
                    for (const auto& i : initials)
                        if (f.shares_role_with(i)) return;
                const EventSignature& f = finals.front();
                const EventSignature& i = initials.front();
                const Behaviour* fn = find_node(root, f.origin);
                const Behaviour* in = find_node(root, i.origin);
                out.push_back(Violation{
                    ViolationKind::Sequence, Severity::Error, f.origin, i.origin, i.pos,
                    "'" + (in ? describe(*in) : i.origin.str()) + "' (roles " + roles_str(i.roles) +
                        ") is not connected to the preceding '" + (fn ? describe(*fn) : f.origin.str()) +
                        "' (roles " + roles_str(f.roles) + ")"});
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                check_rec(root, *n.left, out);
                check_rec(root, *n.right, out);
                std::map<InteractionKey, const Behaviour*> left, right;
                interaction_keys(*n.left, left);
                interaction_keys(*n.right, right);
                for (const auto& [key, node] : right) {
                    auto it = left.find(key);
                    if (it == left.end()) continue;
                    const auto& [op, s, r] = key;
                    out.push_back(Violation{ViolationKind::Parallel, Severity::Error, it->second->id, node->id,
                                            node->pos,
                                            "interaction '" + op + ": " + s + " -> " + r +
                                                "' occurs in both branches of a parallel composition"});
                }
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                check_rec(root, *n.then_b, out);
                check_rec(root, *n.else_b, out);
            } else if constexpr (std::is_same_v<T, Behaviour::While> || std::is_same_v<T, Behaviour::Scope>) {
                check_rec(root, *n.body, out);
            }
        },
        b.node);
}

}  // namespace

Events trans_initial(const Behaviour& b)
{
    return std::visit(
        [&](const auto& n) -> Events {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Skip>) {
                return {};
            } else if constexpr (std::is_same_v<T, Behaviour::Assign>) {
                return {EventSignature{{n.role}, b.id, b.pos}};
            } else if constexpr (std::is_same_v<T, Behaviour::Interaction>) {
                return {EventSignature{{n.sender, n.receiver}, b.id, b.pos}};
            } else if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                Events first = trans_initial(*n.first);
                return first.empty() ? trans_initial(*n.second) : first;
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                Events out = trans_initial(*n.left);
                append(out, trans_initial(*n.right));
                return out;
            } else if constexpr (std::is_same_v<T, Behaviour::If> || std::is_same_v<T, Behaviour::While>) {
                return {EventSignature{{n.evaluator}, b.id, b.pos}};
            } else {
                return {EventSignature{{n.coordinator}, b.id, b.pos}};
            }
        },
        b.node);
}

Events trans_final(const Behaviour& b)
{
    return std::visit(
        [&](const auto& n) -> Events {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Behaviour::Skip>) {
                return {};
            } else if constexpr (std::is_same_v<T, Behaviour::Assign>) {
                return {EventSignature{{n.role}, b.id, b.pos}};
            } else if constexpr (std::is_same_v<T, Behaviour::Interaction>) {
                return {EventSignature{{n.sender, n.receiver}, b.id, b.pos}};
            } else if constexpr (std::is_same_v<T, Behaviour::Seq>) {
                Events second = trans_final(*n.second);
                return second.empty() ? trans_final(*n.first) : second;
            } else if constexpr (std::is_same_v<T, Behaviour::Par>) {
                Events out = trans_final(*n.left);
                append(out, trans_final(*n.right));
                return out;
            } else if constexpr (std::is_same_v<T, Behaviour::If>) {
                Events t = trans_final(*n.then_b);
                Events e = trans_final(*n.else_b);
                if (t.empty() || e.empty()) add_unique(t, closing_event(n.evaluator, b));
                append(t, e);
                return t;
            } else if constexpr (std::is_same_v<T, Behaviour::While>) {
                return {closing_event(n.evaluator, b)};
            } else {
                return {closing_event(n.coordinator, b)};
            }
        },
        b.node);
}

std::vector<Violation> check_connectedness(const Behaviour& b)
{
    std::vector<Violation> out;
    check_rec(b, b, out);
    return out;
}

namespace {

std::set<std::string> declared_functions(const std::vector<Include>& includes)
{
    std::set<std::string> fns;
    for (const auto& inc : includes) fns.insert(inc.functions.begin(), inc.functions.end());
    return fns;
}

template <class F> void for_each_expr(const Behaviour& root, F&& f)
{
    for_each_node(root, [&](const Behaviour& n) {
        if (const auto* a = n.as<Behaviour::Assign>()) f(n, *a->rhs);
        else if (const auto* i = n.as<Behaviour::Interaction>()) f(n, *i->send_expr);
        else if (const auto* c = n.as<Behaviour::If>()) f(n, *c->guard);
        else if (const auto* w = n.as<Behaviour::While>()) f(n, *w->guard);
    });
}

void check_calls(const Behaviour& body, const std::set<std::string>& declared, std::vector<Violation>& out)
{
    for_each_expr(body, [&](const Behaviour& n, const Expr& e) {
        for (const auto& fn : calls_of(e)) {
            if (fn == "getInput" || declared.count(fn)) continue;
            out.push_back(Violation{ViolationKind::Name, Severity::Error, n.id, {}, n.pos,
                                    "call to undeclared function '" + fn + "'"});
        }
    });
}

void check_duplicate_includes(const std::vector<Include>& includes, std::vector<Violation>& out)
{
    std::set<std::string> seen;
    for (const auto& inc : includes)
        for (const auto& fn : inc.functions)
            if (!seen.insert(fn).second)
                out.push_back(Violation{ViolationKind::Name, Severity::Error, {}, {}, inc.pos,
                                        "function '" + fn + "' is included more than once"});
}

}  // namespace

std::vector<Violation> check_rule(const Rule& rule)
{
    std::vector<Violation> out;
    for (const auto& v : vars_of(*rule.condition)) {
        if (v.ns.empty() || v.ns == "N" || v.ns == "E") continue;
        out.push_back(Violation{ViolationKind::Name, Severity::Error, {}, {}, rule.condition->pos,
                                "unknown namespace '" + v.ns + "' in '" + v.ns + "." + v.name +
                                    "' (expected N. or E.)"});
    }
    for (const auto& fn : calls_of(*rule.condition))
        out.push_back(Violation{ViolationKind::Name, Severity::Error, {}, {}, rule.condition->pos,
                                "function call '" + fn + "' is not allowed in an applicability condition"});
    check_duplicate_includes(rule.includes, out);
    check_calls(*rule.body, declared_functions(rule.includes), out);
    for (auto& v : check_connectedness(*normalize(rule.body))) out.push_back(std::move(v));
    return out;
}

std::vector<Violation> validate_program(const Program& p)
{
    std::vector<Violation> out;
    const Behaviour& body = *p.body;
    const std::set<Role> roles = roles_of(body);

    if (!p.preamble.starter) {
        out.push_back(Violation{ViolationKind::Role, Severity::Error, {}, {}, p.preamble.pos,
                                "preamble does not declare a starter role"});
    } else if (!roles.count(*p.preamble.starter) && !p.preamble.locations.count(*p.preamble.starter)) {
        out.push_back(Violation{ViolationKind::Role, Severity::Error, {}, {}, p.preamble.pos,
                                "starter role '" + *p.preamble.starter + "' does not occur in the choreography"});
    }

    check_duplicate_includes(p.includes, out);
    check_calls(body, declared_functions(p.includes), out);

    for_each_expr(body, [&](const Behaviour& n, const Expr& e) {
        for (const auto& v : vars_of(e))
            if (!v.ns.empty())
                out.push_back(Violation{ViolationKind::Name, Severity::Error, n.id, {}, n.pos,
                                        "namespaced reference '" + v.ns + "." + v.name +
                                            "' is only allowed in rule conditions"});
    });

    // variables each role can bind: assignment targets and receiving variables
    std::map<Role, std::set<std::string>> bound;
    for_each_node(body, [&](const Behaviour& n) {
        if (const auto* a = n.as<Behaviour::Assign>()) bound[a->role].insert(a->var);
        else if (const auto* i = n.as<Behaviour::Interaction>()) bound[i->receiver].insert(i->recv_var);
    });
    auto check_guard = [&](const Behaviour& n, const Expr& guard, const Role& r) {
        for (const auto& v : vars_of(guard)) {
            if (!v.ns.empty() || bound[r].count(v.name)) continue;
            out.push_back(Violation{ViolationKind::Name, Severity::Warning, n.id, {}, n.pos,
                                    "guard evaluated at '" + r + "' reads '" + v.name +
                                        "', which is never assigned at '" + r + "'"});
        }
    };
    for_each_node(body, [&](const Behaviour& n) {
        if (const auto* i = n.as<Behaviour::If>()) check_guard(n, *i->guard, i->evaluator);
        else if (const auto* w = n.as<Behaviour::While>()) check_guard(n, *w->guard, w->evaluator);
    });
    return out;
}

std::vector<Violation> check_program(const Program& p)
{
    std::vector<Violation> out = validate_program(p);
    for (auto& v : check_connectedness(*normalize(p.body))) out.push_back(std::move(v));
    return out;
}

}  // namespace chorad
