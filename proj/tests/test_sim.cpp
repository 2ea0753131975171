#include <doctest.h>

#include "chorad/project.hpp"
#include "support.hpp"

using namespace chorad;
using testsupport::parse_ok;

namespace {

std::string joined(const std::vector<std::string>& v)
{
    std::string out;
    for (const auto& s : v) out += s + "\n";
    return out;
}

}  // namespace

TEST_CASE("bundled scenarios reach their expected states")
{
    for (const auto& s : corpus()) {
        CAPTURE(s.name);
        auto cfg = testsupport::scenario_config(s);
        cfg.keep_trace = false;
        for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
            cfg.seed = seed;
            const auto rep = simulate(parse_ok(s.program), cfg);
            INFO(joined(testsupport::mismatches(s, rep)));
            CHECK(testsupport::mismatches(s, rep).empty());
        }
    }
}

TEST_CASE("rules are recorded as applied")
{
    const auto& s = scenario("helloworld-it");
    const auto rep = simulate(parse_ok(s.program), testsupport::scenario_config(s));
    REQUIRE(rep.applied_rules.size() == 1);
    CHECK(rep.applied_rules[0].rule_id == "s0-r0");

    const auto& plain = scenario("helloworld");
    const auto rep2 = simulate(parse_ok(plain.program), testsupport::scenario_config(plain));
    REQUIRE(rep2.applied_rules.size() == 1);
    CHECK(rep2.applied_rules[0].rule_id.empty());
}

TEST_CASE("same seed, same trace")
{
    const auto& s = scenario("appointment-retry");
    auto cfg = testsupport::scenario_config(s);
    cfg.seed = 17;
    const auto app = project(parse_ok(s.program));
    const auto a = simulate(app, cfg);
    const auto b = simulate(app, cfg);
    CHECK(a.trace == b.trace);
    CHECK(a.trace_hash == b.trace_hash);
    std::uint64_t h = kFnvOffset;
    for (const auto& line : a.trace) h = fnv1a(fnv1a(h, line), "\n");
    CHECK(h == a.trace_hash);
    cfg.seed = 18;
    CHECK(simulate(app, cfg).outcome == Outcome::Terminated);
}

TEST_CASE("message categories are always reported")
{
    const auto rep = simulate(parse_ok(pipe_program(3, false)), SimConfig{});
    for (const char* c : {kCatUser, kCatAck, kCatGuard, kCatIteration, kCatDirective, kCatDone, kCatBarrier, kCatMiddleware})
        CHECK(rep.message_counts.count(c) == 1);
    CHECK(rep.message_counts.at(kCatUser) == 3);
    CHECK(rep.message_counts.at(kCatAck) == 3);
    CHECK(rep.message_counts.at(kCatDirective) == 0);
}

TEST_CASE("rules published mid-run affect only later scopes")
{
    const auto app = project(parse_ok(pipe_program(5, true)));
    SimConfig cfg;
    cfg.keep_trace = false;
    cfg.rules.push_back({0, 0, pipe_rules({1, 2, 3, 4, 5})});
    const auto all = simulate(app, cfg);
    CHECK(all.final_states.at("a").at("x") == Value(10));

    cfg.rules[0].step = all.steps + 1;  // never fires
    CHECK(simulate(app, cfg).final_states.at("a").at("x") == Value(5));
}

TEST_CASE("external function failures end the run with an error")
{
    SimConfig cfg;
    cfg.functions = FunctionTable::standard("");
    const auto rep = simulate(parse_ok(forkjoin_program(2, false)), cfg);
    CHECK(rep.outcome == Outcome::Error);
    CHECK_FALSE(rep.error.empty());
}

TEST_CASE("OpenMP exploration matches the serial reference")
{
    const auto& s = scenario("appointment-picnic");
    const auto app = project(parse_ok(s.program));
    auto cfg = testsupport::scenario_config(s);
    const auto par = explore_deadlocks(app, 64, cfg);
    const auto ser = explore_deadlocks_serial(app, 64, cfg);
    CHECK(par == ser);
    CHECK(par.runs == 64);
    CHECK(par.terminated == 64);
    CHECK(par.adapted_runs == 64);
}

TEST_CASE("the negative control misbehaves")
{
    const auto app = project(parse_ok(negative_control_program()), false);
    SimConfig cfg;
    cfg.mode = SimMode::Exhaustive;
    cfg.scripts["bob"] = {"2024-06-01"};
    const auto rep = simulate(app, cfg);
    CHECK(rep.outcome != Outcome::Terminated);
    CHECK(rep.outcome_counts.size() >= 1);

    cfg.mode = SimMode::Random;
    const auto sum = explore_deadlocks(app, 20, cfg);
    CHECK(sum.terminated < 20);
    REQUIRE(sum.counterexample.has_value());
    CHECK(sum.counterexample_seed.has_value());
}

TEST_CASE("generated connected programs never get stuck")
{
    testgen::ProgramGen gen(2024);
    for (int i = 0; i < 150; ++i) {
        auto src = gen.next_connected();
        REQUIRE(src.has_value());
        CAPTURE(*src);
        SimConfig cfg;
        cfg.mode = SimMode::Exhaustive;
        cfg.keep_trace = false;
        const auto rep = simulate(parse_ok(*src), cfg);
        CHECK(rep.outcome == Outcome::Terminated);
        CHECK(rep.leaks.empty());
    }
}

TEST_CASE("scope overhead is constant per scope")
{
    auto counts = [](int n) {
        return count_overhead(project(parse_ok(pipe_program(n, true))), SimConfig{});
    };
    const auto c10 = counts(10);
    const auto c20 = counts(20);
    CHECK(c10.at(kCatDirective) == 10);
    CHECK(c10.at(kCatDone) == 10);
    CHECK(c20.at(kCatDirective) == 2 * c10.at(kCatDirective));
    CHECK(c20.at(kCatMiddleware) == 2 * c10.at(kCatMiddleware));
    const auto none = count_overhead(project(parse_ok(pipe_program(10, false))), SimConfig{});
    CHECK(none.at(kCatDirective) == 0);
    CHECK(none.at(kCatDone) == 0);
    CHECK(none.at(kCatMiddleware) == 0);
}
