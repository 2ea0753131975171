#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "chorad/check.hpp"
#include "chorad/corpus.hpp"
#include "chorad/parser.hpp"
#include "chorad/sim.hpp"
#include "gen.hpp"

namespace chorad::testsupport {

inline Program parse_ok(const std::string& src)
{
    auto r = parse_program(src);
    if (!r.ok()) {
        std::string msg = "parse failed";
        for (const auto& d : r.diagnostics) msg += "\n" + format_diagnostic("<test>", d);
        throw std::runtime_error(msg);
    }
    return std::move(*r.value);
}

/// Rules and environment entries are in place before the first step.
inline SimConfig scenario_config(const Scenario& s)
{
    SimConfig cfg;
    cfg.scripts = s.scripts;
    cfg.functions = FunctionTable::standard(s.buffer, s.free_day);
    for (const auto& [k, v] : s.env) cfg.env.push_back({0, k, v});
    for (const auto& r : s.rules) cfg.rules.push_back({0, 0, r});
    return cfg;
}

/// Human-readable differences between a run and the scenario's expectations.
inline std::vector<std::string> mismatches(const Scenario& s, const SimReport& rep)
{
    std::vector<std::string> out;
    if (rep.outcome != Outcome::Terminated) out.push_back(std::string("outcome ") + to_string(rep.outcome) + " " + rep.error);
    for (const auto& e : s.expect) {
        auto st = rep.final_states.find(e.role);
        if (st == rep.final_states.end()) {
            out.push_back("no final state for " + e.role);
            continue;
        }
        auto it = st->second.find(e.var);
        if (it == st->second.end())
            out.push_back(e.role + "." + e.var + " unset");
        else if (!(it->second == e.value))
            out.push_back(e.role + "." + e.var + " = " + it->second.literal() + ", expected " + e.value.literal());
    }
    if (s.expect_buffer && *s.expect_buffer != rep.buffer)
        out.push_back("buffer '" + rep.buffer + "', expected '" + *s.expect_buffer + "'");
    for (const auto& l : rep.leaks) out.push_back("leak: " + l);
    return out;
}

}  // namespace chorad::testsupport
