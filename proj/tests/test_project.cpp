#include <doctest.h>

#include "chorad/project.hpp"
#include "support.hpp"

using namespace chorad;
using testsupport::parse_ok;

TEST_CASE("aux op names")
{
    CHECK(aux_op_name(NodeId{{0, 1, 1}}, AuxPurpose::Guard) == "_aux_guard_0_1_1");
    CHECK(aux_op_name(NodeId{{0}}, AuxPurpose::Done) == "_aux_done_0");
    CHECK(is_aux_op("_aux_ack_0_2"));
    CHECK_FALSE(is_aux_op("proposal"));
    CHECK(rule_root(NodeId{{0, 3}}) == NodeId{{0, 3, 1}});
}

TEST_CASE("projection of an interaction")
{
    auto app = project(parse_ok("preamble { starter: a }\naioc { m: a( 1 ) -> b( x ) }"));
    CHECK(app.roles() == std::vector<Role>{"a", "b"});
    CHECK(app.starter == "a");
    auto ja = to_json(*app.per_role.at("a"));
    auto jb = to_json(*app.per_role.at("b"));
    CHECK(ja["type"] == "SendTo");
    CHECK(ja["peer"] == "b");
    CHECK(jb["type"] == "RecvFrom");
    CHECK(jb["var"] == "x");
}

TEST_CASE("locations are declared or assigned deterministically")
{
    auto app = project(parse_ok("preamble { starter: b\n location@b = \"socket://h:9\" }\naioc { m: b( 1 ) -> a( x ); n: a( x ) -> c( y ) }"));
    CHECK(app.locations.at("b") == "socket://h:9");
    CHECK(app.locations.at("a") == "socket://localhost:" + std::to_string(kFirstAutoPort));
    CHECK(app.locations.at("c") == "socket://localhost:" + std::to_string(kFirstAutoPort + 2));
}

TEST_CASE("conditionals become local choices plus followers")
{
    auto app = project(parse_ok("preamble { starter: a }\naioc { if( true )@a { m: a( 1 ) -> b( x ) } else { n: a( 2 ) -> b( x ) } }"));
    CHECK(to_json(*app.per_role.at("a"))["type"] == "IfLocal");
    CHECK(to_json(*app.per_role.at("b"))["type"] == "IfFollow");
}

TEST_CASE("scopes are recorded in the scope table")
{
    auto app = project(parse_ok(pipe_program(3, true)));
    CHECK(app.scope_table.size() == 3);
    for (const auto& [id, info] : app.scope_table) {
        CHECK(info.props.count("x") == 1);
        CHECK(info.involved.size() == 1);  // the coordinator is not listed
    }
}

TEST_CASE("non-connected programs are refused unless explicitly allowed")
{
    const auto p = parse_ok(negative_control_program());
    CHECK_THROWS_AS(project(p), ProjectionError);
    CHECK_NOTHROW(project(p, false));
}

TEST_CASE("rule bodies project per role")
{
    auto rules = parse_rules(pipe_rules({1}));
    REQUIRE(rules.ok());
    const NodeId scope{{0, 2}};
    auto a = project_rule_body(rules.value->at(0).body, scope, "a", "a");
    auto b = project_rule_body(rules.value->at(0).body, scope, "a", "b");
    CHECK(to_json(*a)["type"] == "SeqP");
    CHECK(to_json(*b)["type"] == "RecvFrom");
    CHECK_THROWS_AS(project_rule_body(rules.value->at(0).body, scope, "a", "c"), ProjectionError);
}

TEST_CASE("whole application serializes")
{
    for (const auto& s : corpus()) {
        CAPTURE(s.name);
        auto app = project(parse_ok(s.program));
        auto j = to_json(app);
        CHECK(j.is_object());
        CHECK(j.dump().size() > 10);
    }
}
