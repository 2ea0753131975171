#include <doctest.h>

#include <future>
#include <thread>

#include "chorad/host.hpp"
#include "chorad/net.hpp"
#include "support.hpp"

using namespace chorad;
using testsupport::parse_ok;

namespace {

int free_port()
{
    LineServer probe(0, [](const Json&) -> std::optional<Json> { return std::nullopt; });
    return probe.port();
}

std::string local(int port) { return "socket://localhost:" + std::to_string(port); }

}  // namespace

TEST_CASE("address parsing")
{
    CHECK(parse_address("socket://example.org:80").host == "example.org");
    CHECK(parse_address("socket://example.org:80").port == 80);
    CHECK(parse_address("h:1").str() == "h:1");
    CHECK(parse_address(":7").host == "localhost");
    CHECK_THROWS_AS(parse_address("nope"), NetError);
}

TEST_CASE("line server echoes requests")
{
    LineServer srv(0, [](const Json& j) -> std::optional<Json> { return Json{{"echo", j}}; });
    auto conn = LineConnection::connect(parse_address(":" + std::to_string(srv.port())), 2000);
    auto reply = conn.request({{"n", 1}}, 2000);
    CHECK(reply["echo"]["n"] == 1);
    reply = conn.request({{"n", 2}}, 2000);
    CHECK(reply["echo"]["n"] == 2);
}

TEST_CASE("remote external functions")
{
    FunctionService fs(0, FunctionTable::standard("abc"));
    const auto addr = local(fs.port());
    CHECK(call_function_remote(addr, "getNext", {"a"}, 2000) == Value("b"));
    CHECK(call_function_remote(addr, "getNthChar", {2}, 2000) == Value("c"));
    CHECK_THROWS(call_function_remote(addr, "nosuch", {}, 2000));
}

TEST_CASE("manager, servers and environment over TCP")
{
    ManagerService mgr(0);
    ServerService s1(0, "s1");
    ServerService s2(0, "s2");
    const auto maddr = local(mgr.port());
    ManagerClient client(maddr, 2000);

    CHECK(client.register_server(local(s1.port())) == 0);
    CHECK(client.register_server(local(s2.port())) == 1);
    CHECK_THROWS(client.register_server(local(free_port())));

    CHECK(publish_remote(local(s2.port()), hello_world_rule(), 2000).rule_ids == std::vector<std::string>{"s2-r0"});
    CHECK_FALSE(publish_remote(local(s1.port()), "rule { on { Q.x } do { x@a = 1 } }", 2000).ok());

    MatchRequest req;
    req.scope_id = "0_1";
    req.props = {{"name", "hello_world"}};
    req.coordinator = "user";
    req.involved = {"user"};
    CHECK_FALSE(client.match(req).match);

    client.env_set("lang", "it");
    CHECK(client.env_get().at("lang") == Value("it"));
    const auto m = client.match(req);
    CHECK(m.match);
    CHECK(m.rule_id == "s2-r0");
}

TEST_CASE("threaded in-process run")
{
    for (const char* name : {"helloworld", "appointment-retry", "pipe-5-rules", "forkjoin-5-rules"}) {
        CAPTURE(name);
        const auto& s = scenario(name);
        HostOptions opts;
        opts.scripts = s.scripts;
        opts.scripted = true;
        opts.functions = FunctionTable::standard(s.buffer, s.free_day);
        opts.idle_timeout_ms = 10000;
        opts.embedded_manager = std::make_shared<AdaptationManager>();
        auto server = std::make_shared<AdaptationServer>("s0");
        for (const auto& r : s.rules) REQUIRE(server->publish(r).ok());
        opts.embedded_manager->register_server("s0", std::make_shared<LocalServerEndpoint>(server));
        const auto res = run_all(project(parse_ok(s.program)), opts);
        INFO(res.error);
        REQUIRE(res.ok);
        for (const auto& e : s.expect) CHECK(res.final_states.at(e.role).at(e.var) == e.value);
        if (s.expect_buffer) CHECK(opts.functions.buffer() == *s.expect_buffer);
    }
}

TEST_CASE("blocked roles time out")
{
    HostOptions opts;
    opts.scripted = true;
    opts.idle_timeout_ms = 300;
    const auto res = run_all(project(parse_ok(negative_control_program()), false), opts);
    CHECK_FALSE(res.ok);
    CHECK_FALSE(res.error.empty());
}

TEST_CASE("one process per role over TCP with remote adaptation")
{
    ManagerService mgr(0);
    ServerService srv(0, "s0");
    ManagerClient(local(mgr.port()), 2000).register_server(local(srv.port()));
    REQUIRE(srv.rules().publish(hello_world_rule()).ok());
    mgr.manager().environment().set("lang", "it");

    const int pu = free_port();
    const int pd = free_port();
    const auto src = "preamble { starter: user\n location@user = \"" + local(pu) + "\"\n location@display = \"" +
                     local(pd) + "\" }\naioc {\n scope @user { msg@user = \"Hello World\" } prop { N.name = \"hello_world\" };\n"
                     " send: user( msg ) -> display( msg ) }\n";
    const auto app = project(parse_ok(src));

    HostOptions opts;
    opts.scripted = true;
    opts.manager = local(mgr.port());
    opts.idle_timeout_ms = 10000;
    auto display = std::async(std::launch::async, [&] { return run_role(app, "display", "", opts); });
    auto user = std::async(std::launch::async, [&] { return run_role(app, "user", "", opts); });
    const auto ru = user.get();
    const auto rd = display.get();
    INFO(ru.error << " / " << rd.error);
    REQUIRE(ru.ok);
    REQUIRE(rd.ok);
    CHECK(rd.final_states.at("display").at("msg") == Value("Ciao Mondo"));
    REQUIRE(ru.applied_rules.size() == 1);
    CHECK(ru.applied_rules[0].rule_id == "s0-r0");
}
