#include <doctest.h>

#include "chorad/eval.hpp"
#include "chorad/parser.hpp"
#include "gen.hpp"
#include "support.hpp"

using namespace chorad;

namespace {

Value ev(const std::string& src, const Store& store = {})
{
    auto e = parse_expr(src);
    REQUIRE(e.ok());
    return eval_expr(**e.value, store, "r", [](const std::string& fn, const std::vector<Value>&) -> Value {
        if (fn == "seven") return 7;
        throw EvalError("no function " + fn);
    });
}

}  // namespace

TEST_CASE("arithmetic and precedence")
{
    CHECK(ev("1 + 2 * 3") == Value(7));
    CHECK(ev("(1 + 2) * 3") == Value(9));
    CHECK(ev("10 - 4 - 3") == Value(3));
    CHECK(ev("7 / 2") == Value(3));
    CHECK(ev("seven() + 1") == Value(8));
    CHECK_THROWS_AS(ev("1 / 0"), EvalError);
    CHECK_THROWS_AS(ev("9223372036854775807 + 1"), EvalError);
}

TEST_CASE("strings, comparisons and logic")
{
    CHECK(ev("\"a\" + 1") == Value("a1"));
    CHECK(ev("\"Bob proposes \" + x", {{"x", Value("cinema")}}) == Value("Bob proposes cinema"));
    CHECK(ev("x == \"y\"", {{"x", Value("y")}}) == Value(true));
    CHECK(ev("1 == \"1\"") == Value(true));
    CHECK(ev("! false and 2 < 3") == Value(true));
    CHECK(ev("false and undefined_var") == Value(false));
    CHECK(ev("true or undefined_var") == Value(true));
    CHECK_THROWS_AS(ev("1 < \"a\""), EvalError);
    CHECK_THROWS_AS(ev("missing + 1"), UnboundVariable);
}

TEST_CASE("value json round trip")
{
    for (const Value& v : {Value(3), Value(true), Value("x\"y")}) CHECK(Value::from_json(v.to_json()) == v);
    Store s{{"a", 1}, {"b", "two"}};
    CHECK(store_from_json(store_to_json(s)) == s);
}

TEST_CASE("parser reports positions")
{
    auto r = parse_program("preamble { starter: a }\naioc {\n  x@a = \n}\n");
    REQUIRE_FALSE(r.ok());
    REQUIRE_FALSE(r.diagnostics.empty());
    CHECK(r.diagnostics[0].line == 4);
}

TEST_CASE("bundled programs parse")
{
    for (const auto& s : corpus()) {
        CAPTURE(s.name);
        CHECK(parse_program(s.program).ok());
        for (const auto& rules : s.rules) CHECK(parse_rules(rules).ok());
    }
    for (const auto& c : check_corpus()) {
        CAPTURE(c.name);
        CHECK(parse_program(c.program).ok());
    }
}

TEST_CASE("rule files")
{
    auto r = parse_rules(hello_world_rule() + event_selection_rule());
    REQUIRE(r.ok());
    REQUIRE(r.value->size() == 2);
    CHECK(r.value->at(1).includes.size() == 2);
    CHECK(roles_of(*r.value->at(0).body) == std::set<Role>{"user"});
}

TEST_CASE("pretty printing reparses to the normalized tree")
{
    testgen::ProgramGen gen(42);
    for (int i = 0; i < 200; ++i) {
        const auto src = gen.next();
        CAPTURE(src);
        auto p = testsupport::parse_ok(src);
        auto norm = normalize(p.body);
        auto again = parse_behaviour(pretty_print(*norm));
        REQUIRE(again.ok());
        CHECK(structurally_equal(*normalize(*again.value), *norm));
    }
    for (const auto& s : corpus()) {
        CAPTURE(s.name);
        auto p = testsupport::parse_ok(s.program);
        auto again = parse_behaviour(pretty_print(*p.body));
        REQUIRE(again.ok());
        CHECK(structurally_equal(*normalize(*again.value), *normalize(p.body)));
    }
}
