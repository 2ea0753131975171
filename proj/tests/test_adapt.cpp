#include <doctest.h>

#include "chorad/adapt.hpp"
#include "chorad/services.hpp"
#include "support.hpp"

using namespace chorad;

namespace {

bool cond(const std::string& src, const PropertySet& props, const Store& env, const Store& vars = {})
{
    auto e = parse_expr(src);
    REQUIRE(e.ok());
    return evaluate_condition(**e.value, props, vars, env);
}

MatchRequest request(PropertySet props, Role coordinator = "a", std::vector<Role> involved = {"a", "b"})
{
    MatchRequest r;
    r.scope_id = "0_1";
    r.props = std::move(props);
    r.coordinator = std::move(coordinator);
    r.involved = std::move(involved);
    return r;
}

std::string rule(const std::string& on, const std::string& body)
{
    return "rule { on { " + on + " } do { " + body + " } }\n";
}

}  // namespace

TEST_CASE("condition namespaces")
{
    CHECK(cond("N.x == 1", {{"x", 1}}, {}));
    CHECK_FALSE(cond("N.x == 1", {{"x", 2}}, {}));
    CHECK(cond("E.lang == \"it\"", {}, {{"lang", "it"}}));
    CHECK(cond("x > 2", {}, {}, {{"x", 3}}));
}

TEST_CASE("absent keys and bad types make a condition false")
{
    CHECK_FALSE(cond("E.lang == \"it\"", {}, {}));
    CHECK_FALSE(cond("N.missing == 1 or true", {}, {}));
    CHECK_FALSE(cond("N.x", {{"x", 1}}, {}));
    CHECK_FALSE(cond("N.x + 1", {{"x", 1}}, {}));
}

TEST_CASE("month window of the event selection rule")
{
    const PropertySet props{{"scope_name", "event selection"}};
    const std::string c = "N.scope_name == \"event selection\" and E.month > 5 and E.month < 10";
    CHECK(cond(c, props, {{"month", 6}}));
    CHECK(cond(c, props, {{"month", 9}}));
    CHECK_FALSE(cond(c, props, {{"month", 12}}));
    CHECK_FALSE(cond(c, props, {{"month", 5}}));
    CHECK_FALSE(cond(c, props, {}));
}

TEST_CASE("publication is all or nothing")
{
    AdaptationServer s("s0");
    auto ok = s.publish(rule("N.x == 1", "x@a = 1") + rule("N.x == 2", "x@a = 2"));
    CHECK(ok.ok());
    CHECK(ok.rule_ids == std::vector<std::string>{"s0-r0", "s0-r1"});
    auto bad = s.publish(rule("N.x == 3", "x@a = 3") + rule("Q.x == 4", "x@a = 4"));
    CHECK_FALSE(bad.ok());
    CHECK(bad.rule_ids.empty());
    CHECK(s.rule_count() == 2);
    CHECK_FALSE(s.publish("rule { on {").ok());
    CHECK(s.rule_count() == 2);
    CHECK(s.publish(rule("true", "x@a = 5")).rule_ids == std::vector<std::string>{"s0-r2"});
}

TEST_CASE("earliest applicable rule wins within a server")
{
    AdaptationServer s("s");
    s.publish(rule("N.x == 1", "x@a = 10"));
    s.publish(rule("N.x == 1", "x@a = 20"));
    auto m = s.match(request({{"x", 1}}), {});
    CHECK(m.match);
    CHECK(m.rule_id == "s-r0");
    CHECK(m.body.find("10") != std::string::npos);
    CHECK_FALSE(s.match(request({{"x", 2}}), {}).match);
}

TEST_CASE("rules needing roles outside the scope are skipped")
{
    AdaptationServer s("s");
    s.publish(rule("true", "m: a( 1 ) -> c( y )"));
    s.publish(rule("true", "m: a( 1 ) -> b( y )"));
    auto m = s.match(request({}), {});
    CHECK(m.rule_id == "s-r1");
    // The coordinator itself is always admissible.
    auto only = s.match(request({}, "c", {"a"}), {});
    CHECK(only.rule_id == "s-r0");
}

TEST_CASE("manager queries servers in registration order")
{
    auto env = std::make_shared<Environment>();
    AdaptationManager mgr(env);
    auto a = std::make_shared<AdaptationServer>("A");
    auto b = std::make_shared<AdaptationServer>("B");
    a->publish(rule("E.flag == true", "x@a = 1"));
    b->publish(rule("true", "x@a = 2"));
    CHECK(mgr.register_server("A", std::make_shared<LocalServerEndpoint>(a)) == 0);
    CHECK(mgr.register_server("B", std::make_shared<LocalServerEndpoint>(b)) == 1);

    auto out = mgr.match_scope(request({}));
    CHECK(out.response.rule_id == "B-r0");
    CHECK(out.servers_queried == 2);

    env->set("flag", true);
    out = mgr.match_scope(request({}));
    CHECK(out.response.rule_id == "A-r0");
    CHECK(out.servers_queried == 1);

    mgr.register_server("A", std::make_shared<LocalServerEndpoint>(a));
    CHECK(mgr.registry() == std::vector<std::string>{"B", "A"});
    CHECK(mgr.match_scope(request({})).response.rule_id == "B-r0");
    mgr.deregister_server("B");
    CHECK(mgr.match_scope(request({})).response.rule_id == "A-r0");
}

TEST_CASE("unreachable servers are skipped")
{
    struct Broken : ServerEndpoint {
        MatchResponse match(const MatchRequest&, const Store&) override { throw std::runtime_error("down"); }
    };
    AdaptationManager mgr;
    auto s = std::make_shared<AdaptationServer>("S");
    s->publish(rule("true", "x@a = 1"));
    mgr.register_server("broken", std::make_shared<Broken>());
    mgr.register_server("S", std::make_shared<LocalServerEndpoint>(s));
    auto out = mgr.match_scope(request({}));
    CHECK(out.response.rule_id == "S-r0");
    CHECK(out.servers_skipped == 1);
}

TEST_CASE("stub functions")
{
    auto t = FunctionTable::standard("abc");
    CHECK(t.call("getNext", {"a"}) == Value("b"));
    CHECK(t.call("getDoubleNext", {"y"}) == Value("a"));
    CHECK(t.call("getNext", {"z"}) == Value("a"));
    CHECK(t.call("getTicket", {"d"}) == Value("TICKET-d"));
    CHECK(t.call("getNthChar", {1}) == Value("b"));
    t.call("setNthChar", {1, "q"});
    CHECK(t.buffer() == "aqc");
    CHECK_THROWS_AS(t.call("getNthChar", {9}), FunctionError);
    CHECK_THROWS_AS(t.call("nosuch", {}), FunctionError);

    auto copy = t.clone();
    copy.set_buffer("zzz");
    CHECK(t.buffer() == "aqc");

    for (char c = 'a'; c <= 'z'; ++c) CHECK(shift_letter(c, 26) == c);
    CHECK(shift_letter('a', 27) == 'b');
}

TEST_CASE("function tables round trip through json")
{
    auto t = FunctionTable::standard("xy", false);
    t.define("seq", {{"kind", "sequence"}, {"values", {1, 2}}});
    auto u = FunctionTable::from_json(t.to_json());
    CHECK(u.names() == t.names());
    CHECK(u.buffer() == "xy");
    CHECK(u.call("isFreeDay", {"d"}) == Value(false));
    CHECK(u.call("seq", {}) == Value(1));
    CHECK(u.call("seq", {}) == Value(2));
    CHECK(u.call("seq", {}) == Value(2));
}
