#include "chorad/sim.hpp"

#include <algorithm>
#include <memory>
#include <random>
#include <set>
#include <unordered_set>


#include "chorad/adapt.hpp"

namespace chorad {

const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::Terminated: return "terminated";
    case Outcome::Deadlock: return "deadlock";
    case Outcome::StepLimit: return "stepLimit";
    case Outcome::Error: return "error";
    }
    return "?";
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

struct OpCounts {
    std::uint64_t sends = 0, recvs = 0, acks = 0, acked = 0;
};

struct World {
    std::vector<RoleMachine> machines;
    std::map<Role, std::size_t> index;
    FunctionTable functions;
    std::vector<AdaptationServer> servers;
    Environment env;
    std::size_t next_rule = 0;
    std::size_t next_env = 0;
    std::uint64_t step = 0;
    std::map<std::string, std::uint64_t> counts;
    std::map<std::string, OpCounts> ops;
    std::uint64_t hash = kFnvOffset;
    std::vector<std::string> trace;

    World fork() const
    {
        World w(*this);
        w.functions = functions.clone();
        return w;
    }

    bool all_finished() const
    {
        return std::all_of(machines.begin(), machines.end(), [](const RoleMachine& m) { return m.finished(); });
    }
};

struct Timeline {
    std::vector<RulePublication> rules;
    std::vector<EnvChange> env;
};

Timeline make_timeline(const SimConfig& cfg)
{
    Timeline t{cfg.rules, cfg.env};
    std::stable_sort(t.rules.begin(), t.rules.end(), [](auto& a, auto& b) { return a.step < b.step; });
    std::stable_sort(t.env.begin(), t.env.end(), [](auto& a, auto& b) { return a.step < b.step; });
    return t;
}

const char* category(const Message& m)
{
    switch (m.kind) {
    case MessageKind::Msg:
        if (!is_aux_op(m.op)) return kCatUser;
        return m.op.rfind(std::string("_aux_") + to_string(AuxPurpose::Ack), 0) == 0 ? kCatIteration : kCatGuard;
    case MessageKind::Ack: return kCatAck;
    case MessageKind::Directive: return kCatDirective;
    case MessageKind::Done: return kCatDone;
    case MessageKind::Ready:
    case MessageKind::Start: return kCatBarrier;
    default: return kCatMiddleware;
    }
}

class SimEffects : public Effects {
public:
    SimEffects(World& w, bool keep_trace) : w_(w), keep_trace_(keep_trace) {}

    void post(Message m) override
    {
        ++w_.counts[category(m)];
        if (m.kind == MessageKind::Msg && !is_aux_op(m.op)) ++w_.ops[m.op].sends;
        if (m.kind == MessageKind::Ack) ++w_.ops[m.op].acks;
        auto it = w_.index.find(m.to);
        if (it == w_.index.end()) throw RuntimeError("message to unknown role '" + m.to + "'");
        w_.machines[it->second].deliver(std::move(m));
    }

    Value call_external(const std::string& fn, const std::string&, const std::vector<Value>& args) override
    {
        try {
            return w_.functions.call(fn, args);
        } catch (const FunctionError& e) {
            throw RuntimeError(std::string("external call failed: ") + e.what());
        }
    }

    MatchResponse match_scope(const MatchRequest& req) override
    {
        AdaptationManager mgr(std::make_shared<Environment>(w_.env));
        for (std::size_t i = 0; i < w_.servers.size(); ++i) {
            // non-owning handle: the world outlives the manager
            std::shared_ptr<AdaptationServer> handle(std::shared_ptr<void>(), &w_.servers[i]);
            mgr.register_server("sim-server-" + std::to_string(i), std::make_shared<LocalServerEndpoint>(handle));
        }
        const MatchOutcome out = mgr.match_scope(req);
        // matchReq + matchResp, envGet + envSnapshot, request/response per server
        w_.counts[kCatMiddleware] += 4 + 2 * static_cast<std::uint64_t>(out.servers_queried);
        return out.response;
    }

    std::optional<std::string> prompt(const Role&, const std::string&) override { return std::nullopt; }

    void trace(const TraceEvent& ev) override
    {
        if (ev.action == "recv") ++w_.ops[ev.op].recvs;
        if (ev.action == "acked") ++w_.ops[ev.op].acked;
        record(w_, keep_trace_,
               std::to_string(w_.step) + " " + ev.role + " " + std::to_string(ev.task) + " " + ev.action + " " + ev.op +
                   " " + ev.peer + " " + ev.detail);
    }

    static void record(World& w, bool keep, std::string line)
    {
        w.hash = fnv1a(w.hash, line);
        w.hash = fnv1a(w.hash, "\n");
        if (keep) w.trace.push_back(std::move(line));
    }

private:
    World& w_;
    bool keep_trace_;
};

World make_world(const ProjectedApp& app, const SimConfig& cfg)
{
    World w;
    for (const auto& role : app.roles()) {
        auto it = cfg.scripts.find(role);
        std::vector<std::string> script = it == cfg.scripts.end() ? std::vector<std::string>{} : it->second;
        w.index[role] = w.machines.size();
        w.machines.emplace_back(make_role_setup(app, role, std::move(script)));
    }
    w.functions = cfg.functions.clone();
    w.servers.reserve(static_cast<std::size_t>(std::max(cfg.servers, 0)));
    for (int i = 0; i < cfg.servers; ++i) w.servers.emplace_back("s" + std::to_string(i));
    return w;
}

// Throws RuntimeError when a publication is rejected or targets a missing server.
void fire_timeline(World& w, const Timeline& t, bool keep_trace)
{
    while (w.next_env < t.env.size() && t.env[w.next_env].step <= w.step) {
        const auto& e = t.env[w.next_env++];
        w.env.set(e.key, e.value);
        SimEffects::record(w, keep_trace, std::to_string(w.step) + " env set " + e.key + " " + e.value.literal());
    }
    while (w.next_rule < t.rules.size() && t.rules[w.next_rule].step <= w.step) {
        const auto& r = t.rules[w.next_rule++];
        if (r.server < 0 || static_cast<std::size_t>(r.server) >= w.servers.size())
            throw RuntimeError("rule publication targets missing server " + std::to_string(r.server));
        const PublishResult res = w.servers[r.server].publish(r.source);
        if (!res.ok()) throw RuntimeError("rule publication rejected: " + res.diagnostics.front());
        std::string ids;
        for (const auto& id : res.rule_ids) ids += " " + id;
        SimEffects::record(w, keep_trace, std::to_string(w.step) + " publish s" + std::to_string(r.server) + ids);
    }
}

std::vector<std::pair<std::size_t, int>> transitions(const World& w)
{
    std::vector<std::pair<std::size_t, int>> out;
    for (std::size_t i = 0; i < w.machines.size(); ++i)
        for (int t : w.machines[i].enabled_tasks()) out.emplace_back(i, t);
    return out;
}

void apply(World& w, const std::pair<std::size_t, int>& tr, bool keep_trace)
{
    SimEffects fx(w, keep_trace);
    w.machines[tr.first].step(tr.second, fx);
    ++w.step;
}

std::vector<std::string> conservation_leaks(const World& w)
{
    std::vector<std::string> out;
    for (const auto& [op, c] : w.ops)
        if (c.sends != c.recvs || c.sends != c.acks || c.acks != c.acked)
            out.push_back("operation '" + op + "': sends=" + std::to_string(c.sends) + " receives=" +
                          std::to_string(c.recvs) + " acks=" + std::to_string(c.acks) + " acked=" +
                          std::to_string(c.acked));
    for (const auto& m : w.machines)
        if (!m.mailbox().empty())
            out.push_back("role '" + m.role() + "' holds " + std::to_string(m.mailbox().size()) +
                          " undelivered message(s)");
    return out;
}

SimReport report_of(const World& w, Outcome outcome, std::string error)
{
    SimReport r;
    r.outcome = outcome;
    r.error = std::move(error);
    r.steps = w.step;
    for (const auto& m : w.machines) {
        r.final_states[m.role()] = m.store();
        for (const auto& a : m.applied_rules()) r.applied_rules.push_back(a);
        if (outcome == Outcome::Deadlock)
            for (const auto& b : m.blocked_on()) r.blocked.push_back(m.role() + ": " + b);
    }
    r.message_counts = w.counts;
    for (const char* c : {kCatUser, kCatAck, kCatGuard, kCatIteration, kCatDirective, kCatDone, kCatBarrier,
                          kCatMiddleware})
        r.message_counts.try_emplace(c, 0);
    r.trace = w.trace;
    r.trace_hash = w.hash;
    r.buffer = w.functions.buffer();
    if (outcome == Outcome::Terminated) r.leaks = conservation_leaks(w);
    return r;
}

std::string world_digest(const World& w, const Timeline& t)
{
    std::string d;
    for (const auto& m : w.machines) d += m.digest() + "\x1f";
    d += std::to_string(w.next_rule) + "/" + std::to_string(w.next_env);
    if (w.next_rule < t.rules.size() || w.next_env < t.env.size()) d += "@" + std::to_string(w.step);
    return d + "|" + w.functions.buffer();
}

SimReport simulate_random(const ProjectedApp& app, const SimConfig& cfg)
{
    const Timeline tl = make_timeline(cfg);
    World w = make_world(app, cfg);
    std::mt19937_64 rng(cfg.seed);
    try {
        while (true) {
            fire_timeline(w, tl, cfg.keep_trace);
            if (w.all_finished()) return report_of(w, Outcome::Terminated, "");
            const auto tr = transitions(w);
            if (tr.empty()) return report_of(w, Outcome::Deadlock, "no enabled transition");
            if (w.step >= cfg.max_steps) return report_of(w, Outcome::StepLimit, "step limit reached");
            apply(w, tr[rng() % tr.size()], cfg.keep_trace);
        }
    } catch (const RuntimeError& e) {
        return report_of(w, Outcome::Error, e.what());
    }
}

SimReport simulate_exhaustive(const ProjectedApp& app, const SimConfig& cfg)
{
    const Timeline tl = make_timeline(cfg);
    std::vector<World> stack;
    stack.push_back(make_world(app, cfg));
    std::unordered_set<std::string> seen;
    std::map<std::string, std::uint64_t> outcomes;
    std::optional<SimReport> failure, first_ok;
    bool capped = false;

    auto note = [&](SimReport r) {
        ++outcomes[to_string(r.outcome)];
        const bool bad = r.outcome != Outcome::Terminated || !r.leaks.empty();
        if (bad && !failure) failure = std::move(r);
        else if (!bad && !first_ok) first_ok = std::move(r);
    };

    while (!stack.empty()) {
        World w = std::move(stack.back());
        stack.pop_back();
        try {
            fire_timeline(w, tl, cfg.keep_trace);
        } catch (const RuntimeError& e) {
            note(report_of(w, Outcome::Error, e.what()));
            continue;
        }
        if (!seen.insert(world_digest(w, tl)).second) continue;
        if (seen.size() > cfg.state_cap) {
            capped = true;
            break;
        }
        if (w.all_finished()) {
            note(report_of(w, Outcome::Terminated, ""));
            continue;
        }
        const auto tr = transitions(w);
        if (tr.empty()) {
            note(report_of(w, Outcome::Deadlock, "no enabled transition"));
            continue;
        }
        if (w.step >= cfg.max_steps) {
            note(report_of(w, Outcome::StepLimit, "step limit reached"));
            continue;
        }
        for (auto it = tr.rbegin(); it != tr.rend(); ++it) {
            World next = w.fork();
            try {
                apply(next, *it, cfg.keep_trace);
                stack.push_back(std::move(next));
            } catch (const RuntimeError& e) {
                note(report_of(next, Outcome::Error, e.what()));
            }
        }
    }

    SimReport r;
    if (failure) r = std::move(*failure);
    else if (first_ok) r = std::move(*first_ok);
    if (capped) {
        ++outcomes[to_string(Outcome::StepLimit)];
        if (!failure) {
            r.outcome = Outcome::StepLimit;
            r.error = "state cap of " + std::to_string(cfg.state_cap) + " reached";
        }
    }
    r.states_explored = seen.size();
    r.outcome_counts = std::move(outcomes);
    return r;
}

}  // namespace

SimReport simulate(const ProjectedApp& app, const SimConfig& cfg)
{
    return cfg.mode == SimMode::Exhaustive ? simulate_exhaustive(app, cfg) : simulate_random(app, cfg);
}

SimReport simulate(const Program& p, const SimConfig& cfg) { return simulate(project(p), cfg); }

Json SimReport::to_json() const
{
    Json states = Json::object();
    for (const auto& [role, store] : final_states) states[role] = store_to_json(store);
    Json applied = Json::array();
    for (const auto& a : applied_rules)
        applied.push_back({{"scopeId", a.scope_id}, {"ruleId", a.rule_id.empty() ? Json(nullptr) : Json(a.rule_id)}});
    Json j = {{"outcome", chorad::to_string(outcome)},
              {"steps", steps},
              {"finalStates", states},
              {"messageCounts", message_counts},
              {"traceHash", trace_hash},
              {"appliedRules", applied},
              {"buffer", buffer},
              {"leaks", leaks},
              {"trace", trace}};
    if (!error.empty()) j["error"] = error;
    if (!blocked.empty()) j["blocked"] = blocked;
    if (!outcome_counts.empty()) {
        j["statesExplored"] = states_explored;
        j["outcomeCounts"] = outcome_counts;
    }
    return j;
}

// ---------------------------------------------------------------------------

bool ExploreSummary::operator==(const ExploreSummary& o) const
{
    return runs == o.runs && terminated == o.terminated && deadlocks == o.deadlocks && errors == o.errors &&
           step_limits == o.step_limits && leaks == o.leaks && adapted_runs == o.adapted_runs &&
           counterexample_seed == o.counterexample_seed;
}

namespace {

struct SeedResult {
    Outcome outcome = Outcome::Terminated;
    bool leak = false;
    bool adapted = false;
};

SeedResult run_seed(const ProjectedApp& app, const SimConfig& base, std::uint64_t seed)
{
    SimConfig cfg = base;
    cfg.seed = seed;
    cfg.keep_trace = false;
    SeedResult out;
    try {
        const SimReport r = simulate(app, cfg);
        out.outcome = r.outcome;
        out.leak = !r.leaks.empty();
        out.adapted = std::any_of(r.applied_rules.begin(), r.applied_rules.end(),
                                  [](const AppliedRule& a) { return !a.rule_id.empty(); });
    } catch (const std::exception&) {
        out.outcome = Outcome::Error;
    }
    return out;
}

void accumulate(ExploreSummary& s, const SeedResult& r, std::uint64_t seed)
{
    ++s.runs;
    switch (r.outcome) {
    case Outcome::Terminated: ++s.terminated; break;
    case Outcome::Deadlock: ++s.deadlocks; break;
    case Outcome::StepLimit: ++s.step_limits; break;
    case Outcome::Error: ++s.errors; break;
    }
    if (r.leak) ++s.leaks;
    if (r.adapted) ++s.adapted_runs;
    if ((r.outcome != Outcome::Terminated || r.leak) && !s.counterexample_seed) s.counterexample_seed = seed;
}

void attach_counterexample(ExploreSummary& s, const ProjectedApp& app, const SimConfig& base)
{
    if (!s.counterexample_seed) return;
    SimConfig cfg = base;
    cfg.seed = *s.counterexample_seed;
    cfg.keep_trace = true;
    s.counterexample = simulate(app, cfg);
}

}  // namespace

ExploreSummary explore_deadlocks_serial(const ProjectedApp& app, std::uint64_t seeds, const SimConfig& base)
{
    ExploreSummary s;
    for (std::uint64_t i = 0; i < seeds; ++i) accumulate(s, run_seed(app, base, base.seed + i), base.seed + i);
    attach_counterexample(s, app, base);
    return s;
}

ExploreSummary explore_deadlocks(const ProjectedApp& app, std::uint64_t seeds, const SimConfig& base)
{
    std::vector<SeedResult> results(seeds);
    const auto n = static_cast<std::int64_t>(seeds);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < n; ++i) results[i] = run_seed(app, base, base.seed + static_cast<std::uint64_t>(i));

    ExploreSummary s;
    for (std::uint64_t i = 0; i < seeds; ++i) accumulate(s, results[i], base.seed + i);
    attach_counterexample(s, app, base);
    return s;
}

std::map<std::string, std::uint64_t> count_overhead(const ProjectedApp& app, const SimConfig& cfg)
{
    auto rep = simulate(app, cfg);
    if (rep.outcome != Outcome::Terminated)
        throw RuntimeError(std::string("count_overhead: run ended with ") + to_string(rep.outcome) + " " + rep.error);
    return rep.message_counts;
}

}  // namespace chorad
