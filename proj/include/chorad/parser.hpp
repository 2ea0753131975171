#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chorad/ast.hpp"

namespace chorad {

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    int line = 0;
    int column = 0;
};

std::string format_diagnostic(const std::string& file, const Diagnostic& d);

template <class T> struct ParseResult {
    std::optional<T> value;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return value.has_value(); }
};

/// Parses `include`* `preamble { … }` `aioc { … }`. Body NodeIds are rooted at {0}.
ParseResult<Program> parse_program(std::string_view text);

/// Parses zero or more `rule { [include …]* on { cond } do { B } }` blocks.
ParseResult<std::vector<Rule>> parse_rules(std::string_view text);

ParseResult<ExprPtr> parse_expr(std::string_view text);

/// Parses a bare behaviour (the contents of a `do` block) and assigns ids from `root`.
ParseResult<BehaviourPtr> parse_behaviour(std::string_view text, const NodeId& root = NodeId{{0}});

}  // namespace chorad
