// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <functional>
#include <iostream>
#include <sstream>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "chorad/adapt.hpp"
#include "chorad/host.hpp"
#include "chorad/project.hpp"
#include "support.hpp"

using namespace chorad;
using testsupport::parse_ok;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double thread_cpu_seconds()
{
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int n, const std::string& title, const std::function<void(Verdict&)>& body)
{
    Verdict v;
    const auto t0 = Clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failures;
    std::printf("criterion %2d: %s  %s (%.2f s)%s\n", n, v.pass ? "PASS" : "FAIL", title.c_str(), seconds_since(t0),
                v.detail.str().c_str());
    std::fflush(stdout);
}

SimConfig quiet(SimConfig cfg)
{
    cfg.keep_trace = false;
    return cfg;
}

// --- 1 -------------------------------------------------------------------------

void golden_set(Verdict& v)
{
    for (const auto& c : check_corpus()) {
        const auto t0 = Clock::now();
        const auto vs = check_program(parse_ok(c.program));
        const double dt = seconds_since(t0);
        int seq = 0, par = 0;
        for (const auto& x : vs) {
            if (x.kind == ViolationKind::Sequence) ++seq;
            else if (x.kind == ViolationKind::Parallel) ++par;
        }
        v.require(seq == c.sequence_violations && par == c.parallel_violations &&
                      static_cast<int>(vs.size()) == seq + par,
                  c.name + " verdict");
        v.require(dt < 1.0, c.name + " under 1 s");
        if (c.name == "appointment-swapped" && vs.size() == 1) {
            // is_free@alice = isFreeDay( bob_free_day ) moved before the proposal
            v.require(vs[0].pos.line == 13, "swap reported at the moved statement");
        }
    }
    v.detail << " " << check_corpus().size() << " programs";
}

// --- 2 -------------------------------------------------------------------------

Value display_msg(const Scenario& s)
{
    const auto rep = simulate(parse_ok(s.program), quiet(testsupport::scenario_config(s)));
    if (rep.outcome != Outcome::Terminated) throw std::runtime_error(s.name + ": " + to_string(rep.outcome));
    return rep.final_states.at("display").at("msg");
}

void hello_world(Verdict& v)
{
    const auto plain = display_msg(scenario("helloworld"));
    const auto it = display_msg(scenario("helloworld-it"));
    v.require(plain == Value("Hello World"), "unadapted message");
    v.require(it == Value("Ciao Mondo"), "adapted message");

    // Same again through the threaded host with the middleware as separate objects.
    HostOptions opts;
    opts.scripted = true;
    opts.embedded_manager = std::make_shared<AdaptationManager>();
    auto server = std::make_shared<AdaptationServer>("s0");
    opts.embedded_manager->register_server("s0", std::make_shared<LocalServerEndpoint>(server));
    const auto app = project(parse_ok(hello_world_program()));
    const auto before = run_all(app, opts);
    opts.embedded_manager->environment().set("lang", "it");
    server->publish(hello_world_rule());
    const auto after = run_all(app, opts);
    v.require(before.ok && before.final_states.at("display").at("msg") == Value("Hello World"), "host, no rule");
    v.require(after.ok && after.final_states.at("display").at("msg") == Value("Ciao Mondo"), "host, rule");
    v.detail << " sim: " << plain.literal() << " / " << it.literal();
}

// --- 3 -------------------------------------------------------------------------

void pipe_semantics(Verdict& v)
{
    for (const auto& [name, expected] : {std::pair{"pipe-100-norules", 100}, std::pair{"pipe-100-rules", 150}}) {
        const auto& s = scenario(name);
        const auto t0 = Clock::now();
        const auto rep = simulate(parse_ok(s.program), quiet(testsupport::scenario_config(s)));
        const double dt = seconds_since(t0);
        v.require(rep.outcome == Outcome::Terminated, std::string(name) + " terminates");
        for (const char* role : {"a", "b"})
            v.require(rep.final_states.at(role).at("x") == Value(expected), std::string(name) + " x@" + role);
        v.require(dt < 30.0, std::string(name) + " under 30 s");
        v.detail << " " << name << ": x=" << rep.final_states.at("a").at("x").literal() << " in " << dt << " s;";
    }
    v.require(scenario("pipe-100-rules").rules.size() == 1, "one rule file");
    const auto rules = parse_rules(scenario("pipe-100-rules").rules[0]);
    v.require(rules.ok() && rules.value->size() == 50, "50 rules");
}

// --- 4 -------------------------------------------------------------------------

// Each character is advanced independently: two places where a double-next rule
// applies, one place otherwise.
std::string forkjoin_oracle(const std::string& message, const std::vector<int>& doubled)
{
    std::string out = message;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int by = std::count(doubled.begin(), doubled.end(), static_cast<int>(i)) ? 2 : 1;
        out[i] = static_cast<char>('a' + (out[i] - 'a' + by) % 26);
    }
    return out;
}

void forkjoin_semantics(Verdict& v)
{
    v.require(forkjoin_oracle("abcde", {}) == "bcdef" && forkjoin_oracle("abcde", {0, 1}) == "cddef", "oracle sanity");
    v.require(forkjoin_message(5) == "abcde", "initial message");
    struct Case {
        int n;
        bool rules;
        std::vector<int> doubled;
        const char* manifest = nullptr;  ///< bundled scenario expected to agree
    };
    std::vector<int> first_half;
    for (int i = 0; i < 50; ++i) first_half.push_back(i);
    for (const auto& c : {Case{5, false, {}, "forkjoin-5-norules"}, Case{5, true, {0, 1}, "forkjoin-5-rules"},
                          Case{100, false, {}, "forkjoin-100-norules"}, Case{100, true, {0, 1}, "forkjoin-100-rules"},
                          Case{100, true, first_half}}) {
        const auto program = parse_ok(forkjoin_program(c.n, c.rules));
        SimConfig cfg;
        cfg.keep_trace = false;
        cfg.functions = FunctionTable::standard(forkjoin_message(c.n));
        if (c.rules) cfg.rules.push_back({0, 0, forkjoin_rules(c.doubled)});
        for (std::uint64_t seed : {0ull, 7ull, 12345ull}) {
            cfg.seed = seed;
            const auto rep = simulate(program, cfg);
            const auto want = forkjoin_oracle(forkjoin_message(c.n), c.doubled);
            v.require(rep.outcome == Outcome::Terminated && rep.buffer == want,
                      "n=" + std::to_string(c.n) + (c.rules ? " rules" : "") + " seed " + std::to_string(seed) +
                          " got '" + rep.buffer + "'");
            if (c.n == 5 && seed == 0) v.detail << " " << rep.buffer;
        }
        if (c.manifest) {
            const auto& s = scenario(c.manifest);
            v.require(s.expect_buffer == forkjoin_oracle(forkjoin_message(c.n), c.doubled), s.name + " manifest");
        }
    }
}

// --- 5 -------------------------------------------------------------------------

// Rules and env entries of the adapted sibling of a scenario.
const Scenario& adapted_sibling(const Scenario& s)
{
    if (s.name == "helloworld") return scenario("helloworld-it");
    if (s.name.rfind("appointment-", 0) == 0) return scenario("appointment-picnic");
    const auto pos = s.name.find("-norules");
    if (pos != std::string::npos) return scenario(s.name.substr(0, pos) + "-rules");
    return s;
}

void deadlock_freedom(Verdict& v)
{
    constexpr std::uint64_t kSeeds = 1000;
    const auto t0 = Clock::now();
    std::uint64_t runs = 0, deadlocks = 0, leaks = 0, errors = 0, limits = 0, adapted = 0;
    for (const auto& s : corpus()) {
        const auto app = project(parse_ok(s.program));
        const auto base = quiet(testsupport::scenario_config(s));

        // Mid-run: the sibling's rules arrive a third of the way in, its env two thirds in.
        const auto probe = simulate(app, base);
        const auto& sib = adapted_sibling(s);
        auto mid = base;
        mid.rules.clear();
        mid.env.clear();
        for (const auto& r : sib.rules) mid.rules.push_back({probe.steps / 3, 0, r});
        for (const auto& [k, val] : sib.env) mid.env.push_back({2 * probe.steps / 3, k, val});
        mid.env.push_back({probe.steps / 2, "tick", 1});

        for (const SimConfig* cfg : std::initializer_list<const SimConfig*>{&base, &mid}) {
            const auto sum = explore_deadlocks(app, kSeeds, *cfg);
            runs += sum.runs;
            deadlocks += sum.deadlocks;
            leaks += sum.leaks;
            errors += sum.errors;
            limits += sum.step_limits;
            adapted += sum.adapted_runs;
            if (sum.counterexample_seed)
                v.detail << " [" << s.name << (cfg == &mid ? " mid-run" : "") << " seed " << *sum.counterexample_seed
                         << ": " << to_string(sum.counterexample->outcome) << " " << sum.counterexample->error << "]";
        }
    }
    v.require(deadlocks == 0, "no deadlocks");
    v.require(leaks == 0, "no leaks");
    v.require(errors == 0 && limits == 0, "every run terminates");
    v.require(seconds_since(t0) < 600.0, "under 10 min");
    v.detail << " runs=" << runs << " deadlocks=" << deadlocks << " leaks=" << leaks << " errors=" << errors
             << " step-limits=" << limits << " adapted-runs=" << adapted;
}

// --- 6 -------------------------------------------------------------------------

void checker_soundness(Verdict& v)
{
    testgen::ProgramGen gen(20240601);
    int programs = 0, stuck = 0;
    std::size_t max_states = 0;
    std::map<std::string, std::uint64_t> outcomes;
    while (programs < 1000) {
        const auto src = gen.next_connected();
        if (!src) throw std::runtime_error("generator produced no connected program");
        ++programs;
        SimConfig cfg;
        cfg.mode = SimMode::Exhaustive;
        cfg.keep_trace = false;
        const auto rep = simulate(parse_ok(*src), cfg);
        max_states = std::max(max_states, rep.states_explored);
        for (const auto& [k, n] : rep.outcome_counts) outcomes[k] += n;
        if (rep.outcome != Outcome::Terminated || !rep.leaks.empty()) {
            if (stuck++ == 0) v.detail << " [first failure: " << to_string(rep.outcome) << " " << rep.error << "]";
        }
    }
    v.require(stuck == 0, "connected programs never get stuck");
    v.detail << " programs=" << programs << " failing=" << stuck << " max-states=" << max_states;

    SimConfig cfg;
    cfg.mode = SimMode::Exhaustive;
    cfg.scripts["bob"] = {"2024-06-01"};
    const auto neg = simulate(project(parse_ok(negative_control_program()), false), cfg);
    v.require(neg.outcome == Outcome::Deadlock || neg.outcome == Outcome::Error, "negative control misbehaves");
    v.detail << "; negative control: " << to_string(neg.outcome) << " (" << neg.error << ")";
}

// --- 7 -------------------------------------------------------------------------

void first_match(Verdict& v)
{
    const auto app = project(parse_ok(pipe_program(1, true)));
    const std::string rule_a = "rule { on { N.x == 1 } do { x@a = 10 + x; pass: a( x ) -> b( x ) } }\n";
    const std::string rule_b = "rule { on { N.x == 1 } do { x@a = 20 + x; pass: a( x ) -> b( x ) } }\n";

    int across = 0, within = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimConfig cfg;
        cfg.seed = seed;
        cfg.keep_trace = false;
        cfg.servers = 2;
        // B publishes first in time; registration order must still decide.
        cfg.rules = {{0, 1, rule_b}, {0, 0, rule_a}};
        auto rep = simulate(app, cfg);
        if (rep.applied_rules.size() == 1 && rep.applied_rules[0].rule_id == "s0-r0" &&
            rep.final_states.at("b").at("x") == Value(10))
            ++across;

        cfg.servers = 1;
        cfg.rules = {{0, 0, rule_a}, {0, 0, rule_b}};
        rep = simulate(app, cfg);
        if (rep.applied_rules.size() == 1 && rep.applied_rules[0].rule_id == "s0-r0" &&
            rep.final_states.at("b").at("x") == Value(10))
            ++within;
    }
    v.require(across == 100, "registration order across servers");
    v.require(within == 100, "publication order within a server");
    v.detail << " across servers " << across << "/100, within a server " << within << "/100";
}

// --- 8 -------------------------------------------------------------------------

void check_scaling(Verdict& v)
{
    std::vector<double> ns;
    std::vector<std::string> sources;
    for (int n = 100; n <= 1000; n += 100) {
        ns.push_back(n);
        sources.push_back(pipe_program(n, true));
    }
    // The fit uses thread CPU time, which other processes on the host cannot
    // inflate. Sizes are interleaved across rounds so that slow stretches hit
    // every size alike; each sample is a batch of checks and the fastest batch
    // per size is kept. The 5 s bound is checked on wall-clock time.
    constexpr int kRounds = 9;
    constexpr int kBatch = 5;
    std::vector<double> ts(ns.size(), 1e9);
    double t1000 = 0;
    for (int round = 0; round < kRounds; ++round) {
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const double c0 = thread_cpu_seconds();
            for (int k = 0; k < kBatch; ++k) {
                const auto t1 = Clock::now();
                const auto vs = check_program(parse_ok(sources[i]));
                if (has_errors(vs)) throw std::runtime_error("pipe " + std::to_string(ns[i]) + " rejected");
                if (ns[i] == 1000) t1000 = std::max(t1000, seconds_since(t1));
            }
            ts[i] = std::min(ts[i], (thread_cpu_seconds() - c0) / kBatch);
        }
    }
    // Least-squares cubic fit of time against n.
    const int m = static_cast<int>(ns.size());
    Eigen::MatrixXd A(m, 4);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        const double x = ns[i] / 1000.0;
        A.row(i) << 1.0, x, x * x, x * x * x;
        y(i) = ts[i];
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
    const double ss_res = (A * coef - y).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    const double r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    v.require(r2 >= 0.99, "R^2 >= 0.99");
    v.require(t1000 < 5.0, "n=1000 under 5 s");
    v.detail << " R^2=" << r2 << " cpu t(100)=" << ts.front() << " s, t(1000)=" << ts.back()
             << " s; worst wall t(1000)=" << t1000 << " s";
}

// --- 9 -------------------------------------------------------------------------

void overhead_counts(Verdict& v)
{
    const char* scope_cats[] = {kCatDirective, kCatDone, kCatMiddleware};
    auto counts = [](const std::string& src, int buffer_len = 0) {
        SimConfig cfg;
        cfg.functions = FunctionTable::standard(forkjoin_message(buffer_len));
        return count_overhead(project(parse_ok(src)), cfg);
    };

    std::map<std::string, std::uint64_t> per_scope;
    for (int n : {1, 2, 5, 10, 20}) {
        const auto c = counts(pipe_program(n, true));
        for (const char* cat : scope_cats) {
            const auto total = c.at(cat);
            v.require(total % n == 0, std::string(cat) + " divisible by scope count");
            if (!per_scope.count(cat)) per_scope[cat] = total / n;
            v.require(total == per_scope[cat] * static_cast<std::uint64_t>(n),
                      std::string(cat) + " constant per scope at n=" + std::to_string(n));
        }
    }
    const auto c10 = counts(pipe_program(10, true));
    const auto c20 = counts(pipe_program(20, true));
    for (const char* cat : scope_cats) {
        v.require(c10.at(cat) > 0 && c20.at(cat) == 2 * c10.at(cat), std::string(cat) + " ratio 2");
        v.detail << " " << cat << ":" << c10.at(cat) << "->" << c20.at(cat);
    }
    // Fork-join scopes share the same per-scope cost.
    const auto f10 = counts(forkjoin_program(10, true), 10);
    const auto f20 = counts(forkjoin_program(20, true), 20);
    for (const char* cat : scope_cats) v.require(f20.at(cat) == 2 * f10.at(cat), std::string("forkjoin ") + cat);

    for (const auto& src : {pipe_program(10, false), forkjoin_program(10, false)}) {
        SimConfig cfg;
        cfg.functions = FunctionTable::standard(forkjoin_message(10));
        const auto c = count_overhead(project(parse_ok(src)), cfg);
        for (const char* cat : scope_cats) v.require(c.at(cat) == 0, std::string("scopeless ") + cat);
    }
}

// --- 10 ------------------------------------------------------------------------

void determinism(Verdict& v)
{
    int scenarios = 0;
    for (const auto& s : corpus()) {
        const auto app = project(parse_ok(s.program));
        auto cfg = testsupport::scenario_config(s);
        cfg.seed = 4242;
        std::optional<std::uint64_t> first;
        bool same = true;
        for (int i = 0; i < 10; ++i) {
            const auto h = simulate(app, cfg).trace_hash;
            if (!first) first = h;
            same = same && *first == h;
        }
        v.require(same, s.name);
        ++scenarios;
    }
    v.detail << " " << scenarios << " scenarios x 10 runs";
}

}  // namespace

int main()
{
    spdlog::set_level(spdlog::level::err);
    criterion(1, "connectedness golden set", golden_set);
    criterion(2, "hello-world adaptation", hello_world);
    criterion(3, "pipe semantics n=100", pipe_semantics);
    criterion(4, "fork-join semantics", forkjoin_semantics);
    criterion(5, "deadlock freedom over the corpus", deadlock_freedom);
    criterion(6, "checker soundness sample", checker_soundness);
    criterion(7, "first-match selection", first_match);
    criterion(8, "polynomial check scaling", check_scaling);
    criterion(9, "overhead counting", overhead_counts);
    criterion(10, "determinism", determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
