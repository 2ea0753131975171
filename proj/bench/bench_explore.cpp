// Serial vs OpenMP seed exploration over a few bundled scenarios.

#include <benchmark/benchmark.h>

#include "chorad/corpus.hpp"
#include "chorad/parser.hpp"
#include "chorad/project.hpp"
#include "chorad/sim.hpp"

using namespace chorad;

namespace {

struct Fixture {
    ProjectedApp app;
    SimConfig cfg;
};

Fixture load(const std::string& name)
{
    const auto& s = scenario(name);
    Fixture f{project(*parse_program(s.program).value), {}};
    f.cfg.scripts = s.scripts;
    f.cfg.functions = FunctionTable::standard(s.buffer, s.free_day);
    f.cfg.keep_trace = false;
    for (const auto& r : s.rules) f.cfg.rules.push_back({0, 0, r});
    for (const auto& [k, v] : s.env) f.cfg.env.push_back({0, k, v});
    return f;
}

const char* const kScenarios[] = {"appointment-retry", "pipe-100-rules", "forkjoin-5-rules"};

template <bool Parallel> void explore(benchmark::State& state)
{
    const auto f = load(kScenarios[state.range(0)]);
    const auto seeds = static_cast<std::uint64_t>(state.range(1));
    for (auto _ : state) {
        auto sum = Parallel ? explore_deadlocks(f.app, seeds, f.cfg) : explore_deadlocks_serial(f.app, seeds, f.cfg);
        benchmark::DoNotOptimize(sum.terminated);
    }
    state.SetLabel(kScenarios[state.range(0)]);
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(explore<false>)->ArgsProduct({{0, 1, 2}, {64}})->Unit(benchmark::kMillisecond)->Name("explore/serial");
BENCHMARK(explore<true>)->ArgsProduct({{0, 1, 2}, {64}})->Unit(benchmark::kMillisecond)->Name("explore/openmp");

BENCHMARK_MAIN();
