#include "chorad/adapt.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "chorad/check.hpp"
#include "chorad/eval.hpp"
#include "chorad/parser.hpp"

namespace chorad {

void Environment::set(const std::string& key, Value v)
{
    std::lock_guard lock(mu_);
    entries_[key] = std::move(v);
}

Store Environment::snapshot() const
{
    std::lock_guard lock(mu_);
    return entries_;
}

bool evaluate_condition(const Expr& cond, const PropertySet& props, const Store& vars, const Store& env)
{
    auto lookup = [&](const Expr::Var& v) -> std::optional<Value> {
        const Store& where = v.ns == "N" ? props : v.ns == "E" ? env : vars;
        auto it = where.find(v.name);
        if (it == where.end()) return std::nullopt;
        return it->second;
    };
    try {
        const Value r = eval_expr(cond, lookup, nullptr);
        return r.is_bool() && r.as_bool();
    } catch (const EvalError&) {
        return false;
    }
}

// ---------------------------------------------------------------------------

AdaptationServer::AdaptationServer(const AdaptationServer& other) : id_(other.id_)
{
    std::lock_guard lock(other.mu_);
    rules_ = other.rules_;
    next_ = other.next_;
}

PublishResult AdaptationServer::publish(const std::string& source, const std::string& file)
{
    PublishResult out;
    auto parsed = parse_rules(source);
    for (const auto& d : parsed.diagnostics)
        if (d.severity == Severity::Error) out.diagnostics.push_back(format_diagnostic(file, d));
    if (!parsed.ok()) return out;
    for (const auto& rule : *parsed.value)
        for (const auto& v : check_rule(rule))
            if (v.severity == Severity::Error) out.diagnostics.push_back(format_violation(file, v));
    if (!out.ok()) return out;

    std::lock_guard lock(mu_);
    for (const auto& rule : *parsed.value) {
        RuleEntry e;
        e.published_at = next_++;
        e.rule_id = id_ + "-r" + std::to_string(e.published_at);
        e.rule = rule;
        e.body_source = pretty_print(*rule.body);
        out.rule_ids.push_back(e.rule_id);
        rules_.push_back(std::move(e));
    }
    return out;
}

MatchResponse AdaptationServer::match(const MatchRequest& req, const Store& env) const
{
    std::set<Role> allowed(req.involved.begin(), req.involved.end());
    allowed.insert(req.coordinator);
    std::lock_guard lock(mu_);
    for (const auto& e : rules_) {
        if (!evaluate_condition(*e.rule.condition, req.props, req.vars, env)) continue;
        const auto roles = roles_of(*e.rule.body);
        if (!std::includes(allowed.begin(), allowed.end(), roles.begin(), roles.end())) {
            spdlog::info("server {}: rule {} skipped for scope {}: it uses roles outside the scope", id_, e.rule_id,
                         req.scope_id);
            continue;
        }
        return MatchResponse{true, e.rule_id, e.body_source, e.rule.includes};
    }
    return {};
}

std::size_t AdaptationServer::rule_count() const
{
    std::lock_guard lock(mu_);
    return rules_.size();
}

// ---------------------------------------------------------------------------

std::size_t AdaptationManager::register_server(const std::string& address, std::shared_ptr<ServerEndpoint> endpoint)
{
    std::lock_guard lock(mu_);
    std::erase_if(servers_, [&](const Entry& e) { return e.address == address; });
    servers_.push_back(Entry{address, std::move(endpoint)});
    return servers_.size() - 1;
}

void AdaptationManager::deregister_server(const std::string& address)
{
    std::lock_guard lock(mu_);
    std::erase_if(servers_, [&](const Entry& e) { return e.address == address; });
}

std::vector<std::string> AdaptationManager::registry() const
{
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& e : servers_) out.push_back(e.address);
    return out;
}

MatchOutcome AdaptationManager::match_scope(const MatchRequest& req) const
{
    std::vector<Entry> servers;
    {
        std::lock_guard lock(mu_);
        servers = servers_;
    }
    const Store env = env_->snapshot();
    MatchOutcome out;
    for (const auto& s : servers) {
        ++out.servers_queried;
        try {
            MatchResponse r = s.endpoint->match(req, env);
            if (r.match) {
                out.response = std::move(r);
                return out;
            }
        } catch (const std::exception& e) {
            ++out.servers_skipped;
            spdlog::warn("adaptation server {} skipped: {}", s.address, e.what());
        }
    }
    return out;
}

}  // namespace chorad
