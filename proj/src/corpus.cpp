#include "chorad/corpus.hpp"

#include <stdexcept>

#include "chorad/services.hpp"

namespace chorad {

namespace {

const char* kAppointmentHeader = R"(include isFreeDay from "calendar.org:80" with http
include getTicket from "cinema.org:8000" with soap
preamble {
  starter: bob
  location@bob = "socket://localhost:8000"
  location@alice = "socket://alice.com:8000"
  location@cinema = "socket://cinema.org:8001" }
)";

// Runnable variant: the booking step sends bob's own free_day.
std::string appointment_source(const std::string& matching_day, const std::string& notify_second)
{
    return std::string(kAppointmentHeader) + R"(aioc{
  end@bob = false;
  while( ! end )@bob{
    scope @bob {
)" + matching_day + R"(
    } prop { N.scope_name = "matching day" };
    if( is_free )@alice {
      scope @bob {
        proposal: bob( "cinema" ) -> alice( event );
        agreement@alice = getInput( "Bob proposes "  + event +
          ", do you agree?[y/n]");
        if( agreement == "y" )@alice{
          end@bob = true;
          book: bob( free_day ) -> cinema( book_day );
          ticket@cinema = getTicket( book_day );
          { notify: cinema( ticket ) -> bob( ticket )
            | )" + notify_second + R"( }}
      } prop { N.scope_name = "event selection" } };
    if( !end )@bob {
      _r@bob = getInput( "Alice refused. Try another date?[y/n]" );
      if( _r != "y" )@bob{ end@bob = true }}}
}
)";
}

const char* kMatchingDay = R"(      free_day@bob = getInput( "Insert your free day" );
      proposal: bob( free_day ) -> alice( bob_free_day );
      is_free@alice = isFreeDay( bob_free_day );)";

const char* kMatchingDaySwapped = R"(      free_day@bob = getInput( "Insert your free day" );
      is_free@alice = isFreeDay( bob_free_day );
      proposal: bob( free_day ) -> alice( bob_free_day ))";

const char* kNotifyAlice = "notify: cinema( ticket ) -> alice( ticket )";
const char* kNotifyBob = "notify: cinema( ticket ) -> bob( ticket )";

Role pipe_role(int i) { return i % 2 == 1 ? "a" : "b"; }
Role pipe_peer(int i) { return i % 2 == 1 ? "b" : "a"; }
Role fork_role(int i) { return i % 2 == 0 ? "a" : "b"; }

std::string fork_task(int i, const std::string& next_fn, const Role& r)
{
    const std::string l = "l" + std::to_string(i), idx = std::to_string(i);
    return l + "@" + r + " = getNthChar( " + idx + " ); " + l + "@" + r + " = " + next_fn + "( " + l + " ); _r@" + r +
           " = setNthChar( " + idx + ", " + l + " )";
}

}  // namespace

std::string hello_world_program()
{
    return R"(preamble { starter: user }
aioc {
 scope @user{
  msg@user = "Hello World"
 } prop { N.name = "hello_world"};
 send: user( msg ) -> display( msg ) }
)";
}

std::string hello_world_rule()
{
    return R"(rule {
 on { N.name == "hello_world"
 	and E.lang == "it" }
 do { msg@user = "Ciao Mondo" }
}
)";
}

std::string appointment_program() { return appointment_source(kMatchingDay, kNotifyAlice); }

std::string event_selection_rule()
{
    return R"(rule {
  include getWeather from "socket://localhost:8002"
  include getTicket from "cinema.org:8000" with soap
  on { N.scope_name == "event selection" and E.month > 5 and E.month < 10 }
  do { forecasts@bob = getWeather( free_day );
    if( forecasts == "Clear" )@bob{
      eventProposal: bob( "picnic" ) -> alice( event )
    } else { eventProposal: bob( "cinema" ) -> alice( event ) };
    agreement@alice = getInput( "Bob proposes "  + event +
      ", do you agree?[y/n]");
    if( agreement == "y" )@alice {
      end@bob = true |
      if( event == "cinema" )@alice {
        book: bob( free_day ) -> cinema( book_day );
        ticket@cinema = getTicket( book_day );
        { notify: cinema( ticket ) -> bob( ticket )
          | notify: cinema( ticket ) -> alice( ticket ) }
}}}}
)";
}

std::string pipe_program(int n, bool scopes)
{
    std::string s = "include startTimer, stopTimer, endTimer from \"socket://localhost:8000\"\n"
                    "preamble{ starter: a }\n\naioc {\n  { x@a = 0 | x@b = 0 };\n  _r@a = startTimer( " +
                    std::to_string(n) + " );\n";
    for (int i = 1; i <= n; ++i) {
        const Role r = pipe_role(i), o = pipe_peer(i);
        const std::string task = "x@" + r + " = 1 + x; pass: " + r + "( x ) -> " + o + "( x )";
        if (scopes) s += "  scope @" + r + " {" + task + "} prop {N.x = " + std::to_string(i) + "};\n";
        else s += "  " + task + ";\n";
    }
    return s + "  _r@a = stopTimer( " + std::to_string(n) + " )\n}\n";
}

std::string pipe_rules(const std::vector<int>& scopes)
{
    std::string s;
    for (int i : scopes) {
        const Role r = pipe_role(i), o = pipe_peer(i);
        s += "rule {\n  on { N.x == " + std::to_string(i) + " }\n  do { x@" + r + " = 2 + x; pass: " + r + "( x ) -> " +
             o + "( x ) }\n}\n";
    }
    return s;
}

std::string forkjoin_program(int n, bool scopes)
{
    std::string s = "include start, end, startTimer, stopTimer from \"socket://localhost:8000\"\n"
                    "include getNthChar, getNext, setNthChar from \"socket://localhost:8001\"\n\n"
                    "preamble{\tstarter: a }\n\naioc {\n";
    s += std::string("  _r@a = ") + (scopes ? "startTimer" : "start") + "( " + std::to_string(n) + " );\n  {\n";
    for (int i = 0; i < n; ++i) {
        const Role r = fork_role(i);
        s += i == 0 ? "     " : "  |  ";
        if (scopes) s += "scope @" + r + " { " + fork_task(i, "getNext", r) + " } prop { N.char = " + std::to_string(i) + " }\n";
        else s += "{ " + fork_task(i, "getNext", r) + " }\n";
    }
    s += std::string("  };\n  _r@a = ") + (scopes ? "stopTimer" : "end") + "( " + std::to_string(n) + " )\n}\n";
    return s;
}

std::string forkjoin_rules(const std::vector<int>& chars)
{
    std::string s;
    for (int i : chars) {
        s += "rule {\ninclude getNthChar, getDoubleNext, setNthChar from \"socket://localhost:8001\"\n  on { N.char == " +
             std::to_string(i) + " }\n  do { " + fork_task(i, "getDoubleNext", fork_role(i)) + " }\n}\n";
    }
    return s;
}

std::string forkjoin_message(int n)
{
    std::string m;
    for (int i = 0; i < n; ++i) m += static_cast<char>('a' + i % 26);
    return m;
}

std::string negative_control_program()
{
    return R"(include isFreeDay from "calendar.org:80" with http
preamble { starter: bob }
aioc {
  free_day@bob = getInput( "Insert your free day" );
  is_free@alice = isFreeDay( bob_free_day );
  proposal: bob( free_day ) -> alice( bob_free_day )
}
)";
}

// ---------------------------------------------------------------------------

namespace {

Scenario pipe_scenario(int n, bool with_rules)
{
    Scenario s;
    s.name = "pipe-" + std::to_string(n) + (with_rules ? "-rules" : "-norules");
    s.program = pipe_program(n, true);
    int expected = n;
    if (with_rules) {
        // at n=5 the two rules target scopes 1 and 2; at larger n, the first half
        std::vector<int> targets;
        const int k = n <= 5 ? 2 : n / 2;
        for (int i = 1; i <= k; ++i) targets.push_back(i);
        s.rules.push_back(pipe_rules(targets));
        expected += k;
    }
    s.expect = {{"a", "x", Value(expected)}, {"b", "x", Value(expected)}};
    return s;
}

Scenario forkjoin_scenario(int n, bool with_rules)
{
    Scenario s;
    s.name = "forkjoin-" + std::to_string(n) + (with_rules ? "-rules" : "-norules");
    s.program = forkjoin_program(n, true);
    s.buffer = forkjoin_message(n);
    std::string out = s.buffer;
    for (int i = 0; i < n; ++i) out[i] = shift_letter(s.buffer[i], with_rules && i < 2 ? 2 : 1);
    if (with_rules) s.rules.push_back(forkjoin_rules({0, 1}));
    s.expect_buffer = out;
    return s;
}

}  // namespace

std::vector<Scenario> corpus()
{
    std::vector<Scenario> out;
    {
        Scenario s;
        s.name = "helloworld";
        s.program = hello_world_program();
        s.expect = {{"display", "msg", Value("Hello World")}};
        out.push_back(s);
        s.name = "helloworld-it";
        s.rules = {hello_world_rule()};
        s.env = {{"lang", Value("it")}};
        s.expect = {{"display", "msg", Value("Ciao Mondo")}};
        out.push_back(s);
    }
    {
        Scenario s;
        s.program = appointment_program();
        s.name = "appointment-accept";
        s.scripts = {{"bob", {"2024-06-01"}}, {"alice", {"y"}}};
        s.expect = {{"bob", "ticket", Value("TICKET-2024-06-01")},
                    {"alice", "ticket", Value("TICKET-2024-06-01")},
                    {"cinema", "book_day", Value("2024-06-01")},
                    {"bob", "end", Value(true)}};
        out.push_back(s);

        s.name = "appointment-refuse";
        s.scripts = {{"bob", {"2024-06-01", "n"}}, {"alice", {"n"}}};
        s.expect = {{"alice", "agreement", Value("n")}, {"bob", "end", Value(true)}};
        out.push_back(s);

        s.name = "appointment-retry";
        s.scripts = {{"bob", {"2024-06-01", "y", "2024-06-02"}}, {"alice", {"n", "y"}}};
        s.expect = {{"bob", "ticket", Value("TICKET-2024-06-02")},
                    {"alice", "ticket", Value("TICKET-2024-06-02")},
                    {"bob", "end", Value(true)}};
        out.push_back(s);

        s.name = "appointment-picnic";
        s.rules = {event_selection_rule()};
        s.env = {{"month", Value(6)}};
        s.scripts = {{"bob", {"2024-06-01"}}, {"alice", {"y"}}};
        s.expect = {{"alice", "event", Value("picnic")}, {"bob", "forecasts", Value("Clear")}, {"bob", "end", Value(true)}};
        out.push_back(s);
    }
    for (int n : {5, 100})
        for (bool rules : {false, true}) out.push_back(pipe_scenario(n, rules));
    for (int n : {5, 100})
        for (bool rules : {false, true}) out.push_back(forkjoin_scenario(n, rules));
    return out;
}

const Scenario& scenario(const std::string& name)
{
    static const std::vector<Scenario> all = corpus();
    for (const auto& s : all)
        if (s.name == name) return s;
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::vector<CheckCase> check_corpus()
{
    return {
        {"appointment", appointment_program(), 0, 0},
        {"appointment-swapped", appointment_source(kMatchingDaySwapped, kNotifyAlice), 1, 0},
        {"appointment-double-notify", appointment_source(kMatchingDay, kNotifyBob), 0, 1},
        {"helloworld", hello_world_program(), 0, 0},
        {"pipe-5-plain", pipe_program(5, false), 0, 0},
        {"pipe-5-scopes", pipe_program(5, true), 0, 0},
        {"forkjoin-5-plain", forkjoin_program(5, false), 0, 0},
        {"forkjoin-5-scopes", forkjoin_program(5, true), 0, 0},
    };
}

}  // namespace chorad
