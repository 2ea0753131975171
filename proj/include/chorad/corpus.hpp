#pragma once

// Bundled scenarios with their expected terminal states.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chorad/ast.hpp"

namespace chorad {

struct Expectation {
    Role role;
    std::string var;
    Value value;
};

struct Scenario {
    std::string name;
    std::string program;
    std::vector<std::string> rules;  ///< rule files published to one server before the run
    Store env;
    std::map<Role, std::vector<std::string>> scripts;
    std::string buffer;  ///< initial shared buffer of the function service
    bool free_day = true;
    std::vector<Expectation> expect;
    std::optional<std::string> expect_buffer;
};

// Generators. Scopes in pipe/fork-join carry N.x = i (1-based) / N.char = i.
std::string hello_world_program();
std::string hello_world_rule();
std::string appointment_program();
std::string event_selection_rule();
std::string pipe_program(int n, bool scopes);
/// One rule per listed scope index i: `x = 2 + x` at the scope's coordinator.
std::string pipe_rules(const std::vector<int>& scopes);
std::string forkjoin_program(int n, bool scopes);
/// Double-next rules for the listed character indices.
std::string forkjoin_rules(const std::vector<int>& chars);
/// Initial fork-join message of length n: a, b, c, ... wrapping after z.
std::string forkjoin_message(int n);

/// The scenario manifest.
std::vector<Scenario> corpus();
const Scenario& scenario(const std::string& name);

/// Programs whose connectedness verdict is fixed: name -> (source, expected violation count).
struct CheckCase {
    std::string name;
    std::string program;
    int sequence_violations = 0;
    int parallel_violations = 0;
};
std::vector<CheckCase> check_corpus();

/// Minimal non-connected program: a read that precedes the interaction providing it.
std::string negative_control_program();

}  // namespace chorad
