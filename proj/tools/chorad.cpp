// chorad — check, compile, run and simulate adaptable choreographies.
//
// Exit codes: 0 success, 1 diagnostics/violations or usage error, 2 runtime failure.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chorad/check.hpp"
#include "chorad/corpus.hpp"
#include "chorad/host.hpp"
#include "chorad/net.hpp"
#include "chorad/parser.hpp"
#include "chorad/project.hpp"
#include "chorad/sim.hpp"

using namespace chorad;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDiagnostics = 1;
constexpr int kRuntime = 2;

struct Failure {
    int code;
    std::string message;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kDiagnostics, "cannot read '" + path + "'"};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kRuntime, "cannot write '" + path.string() + "'"};
    out << text;
}

Program load_program(const std::string& path)
{
    auto r = parse_program(read_file(path));
    for (const auto& d : r.diagnostics) std::cerr << format_diagnostic(path, d) << "\n";
    if (!r.ok()) throw Failure{kDiagnostics, ""};
    return std::move(*r.value);
}

ProjectedApp load_app(const std::string& path)
{
    const Program p = load_program(path);
    const auto vs = check_program(p);
    for (const auto& v : vs) std::cerr << format_violation(path, v) << "\n";
    if (has_errors(vs)) throw Failure{kDiagnostics, ""};
    return project(p);
}

std::map<Role, std::vector<std::string>> load_scripts(const std::string& path)
{
    std::map<Role, std::vector<std::string>> out;
    if (path.empty()) return out;
    try {
        const Json j = Json::parse(read_file(path));
        for (const auto& [role, entries] : j.items()) out[role] = entries.get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw Failure{kDiagnostics, "script file '" + path + "': " + e.what()};
    }
    return out;
}

FunctionTable load_functions(const std::string& path, const std::string& buffer, bool buffer_set)
{
    FunctionTable t = FunctionTable::standard();
    if (!path.empty()) {
        try {
            t = FunctionTable::from_json(Json::parse(read_file(path)));
        } catch (const std::exception& e) {
            throw Failure{kDiagnostics, "function table '" + path + "': " + e.what()};
        }
    }
    if (buffer_set) t.set_buffer(buffer);
    return t;
}

/// Integers and true/false keep their type; anything else is a string.
Value parse_cli_value(const std::string& s)
{
    if (s == "true") return Value(true);
    if (s == "false") return Value(false);
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return Value(static_cast<std::int64_t>(v));
    } catch (const std::exception&) {
    }
    return Value(s);
}

std::pair<std::string, std::uint64_t> split_at_step(const std::string& spec)
{
    const auto at = spec.rfind('@');
    if (at == std::string::npos) return {spec, 0};
    try {
        return {spec.substr(0, at), std::stoull(spec.substr(at + 1))};
    } catch (const std::exception&) {
        throw Failure{kDiagnostics, "bad step in '" + spec + "'"};
    }
}

Json states_json(const std::map<Role, Store>& states)
{
    Json j = Json::object();
    for (const auto& [role, store] : states) j[role] = store_to_json(store);
    return j;
}

std::string default_manager()
{
    const char* env = std::getenv("CHORAD_MANAGER");
    return env ? env : "";
}

std::atomic<bool> g_stop{false};

void wait_for_signal()
{
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& file, bool rules)
{
    if (rules) {
        auto r = parse_rules(read_file(file));
        for (const auto& d : r.diagnostics) std::cout << format_diagnostic(file, d) << "\n";
        if (!r.ok()) return kDiagnostics;
        bool errors = false;
        for (const auto& rule : *r.value) {
            const auto vs = check_rule(rule);
            for (const auto& v : vs) std::cout << format_violation(file, v) << "\n";
            errors = errors || has_errors(vs);
        }
        return errors ? kDiagnostics : kOk;
    }
    auto r = parse_program(read_file(file));
    for (const auto& d : r.diagnostics) std::cout << format_diagnostic(file, d) << "\n";
    if (!r.ok()) return kDiagnostics;
    const auto vs = check_program(*r.value);
    for (const auto& v : vs) std::cout << format_violation(file, v) << "\n";
    return has_errors(vs) ? kDiagnostics : kOk;
}

int cmd_compile(const std::string& file, const std::string& out_dir)
{
    const ProjectedApp app = load_app(file);
    fs::create_directories(out_dir);
    const Json all = to_json(app);
    Json manifest = {{"source", fs::path(file).filename().string()},
                     {"starter", app.starter},
                     {"roles", app.roles()},
                     {"locations", app.locations},
                     {"includes", includes_to_json(app.includes)},
                     {"scopes", all.at("scopes")},
                     {"files", Json::object()}};
    for (const auto& [role, code] : app.per_role) {
        const std::string name = role + ".json";
        write_file(fs::path(out_dir) / name, to_json(*code).dump(2) + "\n");
        manifest["files"][role] = name;
    }
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "compiled " << app.per_role.size() << " role(s) into " << out_dir << "\n";
    return kOk;
}

struct RunArgs {
    std::string file, role, listen, manager, script, functions, buffer;
    std::vector<std::string> rules, env;
    bool all = false, remote_functions = false, buffer_set = false;
    int timeout_ms = 30000;
};

int cmd_run(const RunArgs& a)
{
    const ProjectedApp app = load_app(a.file);
    HostOptions opts;
    opts.scripts = load_scripts(a.script);
    opts.scripted = !a.script.empty();
    opts.manager = a.manager;
    opts.functions = load_functions(a.functions, a.buffer, a.buffer_set);
    opts.remote_functions = a.remote_functions;
    opts.idle_timeout_ms = a.timeout_ms;

    RunResult r;
    if (!a.role.empty()) {
        r = run_role(app, a.role, a.listen, opts);
    } else {
        if (opts.manager.empty()) {
            // embedded middleware: one server holding --rules, environment from --env
            opts.embedded_manager = std::make_shared<AdaptationManager>();
            auto server = std::make_shared<AdaptationServer>("s0");
            for (const auto& f : a.rules) {
                const PublishResult p = server->publish(read_file(f), f);
                for (const auto& d : p.diagnostics) std::cerr << d << "\n";
                if (!p.ok()) return kDiagnostics;
            }
            opts.embedded_manager->register_server("embedded", std::make_shared<LocalServerEndpoint>(server));
            for (const auto& kv : a.env) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw Failure{kDiagnostics, "--env expects K=V, got '" + kv + "'"};
                opts.embedded_manager->environment().set(kv.substr(0, eq), parse_cli_value(kv.substr(eq + 1)));
            }
        } else if (!a.rules.empty() || !a.env.empty()) {
            throw Failure{kDiagnostics, "--rules/--env apply to the embedded middleware only; use publish/env with --manager"};
        }
        r = run_all(app, opts);
    }
    Json out = {{"ok", r.ok}, {"finalStates", states_json(r.final_states)}};
    if (!r.ok) out["error"] = r.error;
    if (opts.functions.buffer().size() && !opts.remote_functions) out["buffer"] = opts.functions.buffer();
    std::cout << out.dump(2) << "\n";
    if (!r.ok) std::cerr << "error: " << r.error << "\n";
    return r.ok ? kOk : kRuntime;
}

int cmd_manager(int port)
{
    ManagerService svc(port);
    spdlog::info("adaptation manager listening on port {}", svc.port());
    std::cout << "manager listening on port " << svc.port() << std::endl;
    wait_for_signal();
    return kOk;
}

int cmd_server(int port, const std::string& manager, const std::vector<std::string>& rules, const std::string& id,
               const std::string& advertise)
{
    ServerService svc(port, id);
    for (const auto& f : rules) {
        const PublishResult p = svc.rules().publish(read_file(f), f);
        for (const auto& d : p.diagnostics) std::cerr << d << "\n";
        if (!p.ok()) return kDiagnostics;
        for (const auto& rid : p.rule_ids) std::cout << "published " << rid << "\n";
    }
    const std::string self = advertise.empty() ? "localhost:" + std::to_string(svc.port()) : advertise;
    try {
        const auto pos = ManagerClient(manager, 5000).register_server(self);
        std::cout << "server " << id << " at " << self << " registered at position " << pos << std::endl;
    } catch (const std::exception& e) {
        std::cerr << "error: registration with manager failed: " << e.what() << "\n";
        return kRuntime;
    }
    wait_for_signal();
    return kOk;
}

int cmd_env(const std::string& manager, const std::vector<std::string>& args)
{
    ManagerClient client(manager, 5000);
    try {
        if (args.size() == 3 && args[0] == "set") {
            client.env_set(args[1], parse_cli_value(args[2]));
            return kOk;
        }
        if (args.size() == 1 && args[0] == "get") {
            std::cout << store_to_json(client.env_get()).dump(2) << "\n";
            return kOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    std::cerr << "usage: env --manager ADDR set KEY VALUE | get\n";
    return kDiagnostics;
}

int cmd_publish(const std::string& file, const std::string& server)
{
    const std::string source = read_file(file);
    // local check first so diagnostics carry the file name
    AdaptationServer scratch("local");
    const PublishResult local = scratch.publish(source, file);
    if (!local.ok()) {
        for (const auto& d : local.diagnostics) std::cout << d << "\n";
        return kDiagnostics;
    }
    try {
        const PublishResult r = publish_remote(server, source, 5000);
        for (const auto& d : r.diagnostics) std::cout << d << "\n";
        for (const auto& id : r.rule_ids) std::cout << id << "\n";
        return r.ok() ? kOk : kDiagnostics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

struct SimArgs {
    std::string file, script, report, trace, functions, buffer;
    std::vector<std::string> rules, env;
    std::uint64_t seeds = 1, seed = 0, max_steps = 100000;
    int servers = 1;
    bool exhaustive = false, buffer_set = false, no_check = false;
};

int cmd_sim(const SimArgs& a)
{
    const Program p = load_program(a.file);
    const auto vs = a.no_check ? validate_program(p) : check_program(p);
    for (const auto& v : vs) std::cerr << format_violation(a.file, v) << "\n";
    if (has_errors(vs)) return kDiagnostics;
    const ProjectedApp app = project(p, !a.no_check);

    SimConfig cfg;
    cfg.seed = a.seed;
    cfg.mode = a.exhaustive ? SimMode::Exhaustive : SimMode::Random;
    cfg.scripts = load_scripts(a.script);
    cfg.servers = a.servers;
    cfg.max_steps = a.max_steps;
    cfg.functions = load_functions(a.functions, a.buffer, a.buffer_set);
    for (const auto& spec : a.rules) {
        auto [file, step] = split_at_step(spec);
        cfg.rules.push_back({step, 0, read_file(file)});
    }
    for (const auto& spec : a.env) {
        auto [kv, step] = split_at_step(spec);
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Failure{kDiagnostics, "--env expects K=V[@STEP], got '" + spec + "'"};
        cfg.env.push_back({step, kv.substr(0, eq), parse_cli_value(kv.substr(eq + 1))});
    }

    SimReport report;
    Json summary;
    bool clean = true;
    if (!a.exhaustive && a.seeds > 1) {
        const ExploreSummary s = explore_deadlocks(app, a.seeds, cfg);
        summary = {{"runs", s.runs},         {"terminated", s.terminated}, {"deadlocks", s.deadlocks},
                   {"errors", s.errors},     {"stepLimits", s.step_limits}, {"leaks", s.leaks},
                   {"adaptedRuns", s.adapted_runs}};
        if (s.counterexample_seed) summary["counterexampleSeed"] = *s.counterexample_seed;
        report = s.counterexample ? *s.counterexample : simulate(app, cfg);
        clean = !s.counterexample_seed;
    } else {
        report = simulate(app, cfg);
        clean = report.outcome == Outcome::Terminated && report.leaks.empty();
    }

    Json j = report.to_json();
    if (!summary.is_null()) j["summary"] = summary;
    if (!a.trace.empty()) {
        std::string text;
        for (const auto& line : report.trace) text += line + "\n";
        write_file(a.trace, text);
    }
    if (!a.report.empty()) write_file(a.report, j.dump(2) + "\n");

    std::cout << "outcome: " << to_string(report.outcome) << "\n";
    if (!report.error.empty()) std::cout << "error: " << report.error << "\n";
    for (const auto& b : report.blocked) std::cout << "blocked: " << b << "\n";
    for (const auto& l : report.leaks) std::cout << "leak: " << l << "\n";
    if (!summary.is_null()) std::cout << "summary: " << summary.dump() << "\n";
    if (a.exhaustive) std::cout << "states explored: " << report.states_explored << "\n";
    std::cout << "final states: " << states_json(report.final_states).dump() << "\n";
    return clean ? kOk : kRuntime;
}

int cmd_functions(int port, const std::string& table, const std::string& buffer, bool buffer_set)
{
    FunctionService svc(port, load_functions(table, buffer, buffer_set));
    std::cout << "function service listening on port " << svc.port() << std::endl;
    wait_for_signal();
    return kOk;
}

int cmd_corpus_export(const std::string& dir)
{
    fs::create_directories(dir);
    for (const auto& s : corpus()) {
        write_file(fs::path(dir) / (s.name + ".aioc"), s.program);
        for (std::size_t i = 0; i < s.rules.size(); ++i)
            write_file(fs::path(dir) / (s.name + (s.rules.size() > 1 ? "-" + std::to_string(i) : "") + ".arl"),
                       s.rules[i]);
        if (!s.scripts.empty()) write_file(fs::path(dir) / (s.name + ".script.json"), Json(s.scripts).dump(2) + "\n");
    }
    for (const auto& c : check_corpus()) write_file(fs::path(dir) / ("check-" + c.name + ".aioc"), c.program);
    write_file(fs::path(dir) / "negative-control.aioc", negative_control_program());
    std::cout << "exported corpus to " << dir << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    auto logger = spdlog::stderr_color_mt("chorad");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);

    CLI::App app{"chorad: adaptable choreographies"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging to stderr");

    std::string file, out_dir;
    bool rules_mode = false;
    auto* check = app.add_subcommand("check", "Parse, validate and check connectedness");
    check->add_option("file", file, "Program (or rule file with --rules)")->required();
    check->add_flag("--rules", rules_mode, "Treat the file as a rule file");

    auto* compile = app.add_subcommand("compile", "Project a program into per-role code");
    compile->add_option("file", file)->required();
    compile->add_option("-o,--out", out_dir, "Output directory")->required();

    RunArgs run_args;
    run_args.manager = default_manager();
    auto* run = app.add_subcommand("run", "Execute a program");
    run->add_option("file", run_args.file)->required();
    run->add_flag("--all", run_args.all, "Run every role in this process (default)");
    auto* role_opt = run->add_option("--role", run_args.role, "Run one role over TCP");
    run->add_option("--listen", run_args.listen, "Listen address for --role (default: the role's location)")
        ->needs(role_opt);
    run->add_option("--manager", run_args.manager, "Adaptation manager address (default $CHORAD_MANAGER)");
    run->add_option("--script", run_args.script, "JSON input script: role -> [answers]");
    run->add_option("--rules", run_args.rules, "Rule files for the embedded server (--all without --manager)");
    run->add_option("--env", run_args.env, "K=V for the embedded environment");
    run->add_option("--functions", run_args.functions, "Function table JSON for the in-process stubs");
    run->add_option("--buffer", run_args.buffer, "Initial shared buffer of the stub functions")
        ->each([&](const std::string&) { run_args.buffer_set = true; });
    run->add_flag("--remote-functions", run_args.remote_functions, "Call functions at their include addresses");
    run->add_option("--timeout", run_args.timeout_ms, "Idle timeout in ms before a blocked role fails");
    role_opt->excludes(run->get_option("--all"));

    int port = 0;
    auto* manager = app.add_subcommand("manager", "Run the adaptation manager and environment");
    manager->add_option("--port", port)->required();

    std::string manager_addr = default_manager(), server_id = "s0", advertise;
    std::vector<std::string> server_rules;
    auto* server = app.add_subcommand("server", "Run an adaptation server");
    server->add_option("--port", port)->required();
    server->add_option("--manager", manager_addr, "Manager address (default $CHORAD_MANAGER)");
    server->add_option("--rules", server_rules, "Rule files to publish at start-up");
    server->add_option("--id", server_id, "Server id (prefix of rule ids)");
    server->add_option("--advertise", advertise, "Address to register (default localhost:PORT)");

    std::vector<std::string> env_args;
    auto* env = app.add_subcommand("env", "Read or write the environment");
    env->add_option("--manager", manager_addr, "Manager address (default $CHORAD_MANAGER)");
    env->add_option("args", env_args, "set KEY VALUE | get")->required();

    std::string server_addr;
    auto* publish = app.add_subcommand("publish", "Publish a rule file to a server");
    publish->add_option("file", file)->required();
    publish->add_option("--server", server_addr)->required();

    SimArgs sim_args;
    auto* sim = app.add_subcommand("sim", "Simulate under a seeded or exhaustive scheduler");
    sim->add_option("file", sim_args.file)->required();
    sim->add_option("--seeds", sim_args.seeds, "Number of seeds (explores deadlocks when > 1)");
    sim->add_option("--seed", sim_args.seed, "First seed");
    sim->add_option("--rules", sim_args.rules, "FILE[@STEP] rule publication");
    sim->add_option("--env", sim_args.env, "K=V[@STEP] environment write");
    sim->add_option("--script", sim_args.script, "JSON input script");
    sim->add_option("--report", sim_args.report, "Write the JSON report here");
    sim->add_option("--trace", sim_args.trace, "Write the event log here");
    sim->add_option("--servers", sim_args.servers, "Number of adaptation servers");
    sim->add_option("--max-steps", sim_args.max_steps, "Step bound");
    sim->add_option("--functions", sim_args.functions, "Function table JSON");
    sim->add_option("--buffer", sim_args.buffer, "Initial shared buffer")->each([&](const std::string&) {
        sim_args.buffer_set = true;
    });
    sim->add_flag("--exhaustive", sim_args.exhaustive, "Explore every schedule");
    sim->add_flag("--no-connectedness", sim_args.no_check, "Skip the connectedness check (negative controls)");

    std::string table, buffer;
    bool buffer_set = false;
    auto* functions = app.add_subcommand("functions", "Serve stub external functions");
    functions->add_option("--port", port)->required();
    functions->add_option("--table", table, "Function table JSON (default: the bundled stubs)");
    functions->add_option("--buffer", buffer, "Initial shared buffer")->each([&](const std::string&) {
        buffer_set = true;
    });

    auto* corpus_cmd = app.add_subcommand("corpus", "Export the bundled scenarios");
    corpus_cmd->add_option("dir", out_dir, "Target directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kDiagnostics;
    }
    if (verbose) spdlog::set_level(spdlog::level::debug);

    try {
        if (*check) return cmd_check(file, rules_mode);
        if (*compile) return cmd_compile(file, out_dir);
        if (*run) return cmd_run(run_args);
        if (*manager) return cmd_manager(port);
        if (*server) {
            if (manager_addr.empty()) throw Failure{kDiagnostics, "server needs --manager or CHORAD_MANAGER"};
            return cmd_server(port, manager_addr, server_rules, server_id, advertise);
        }
        if (*env) {
            if (manager_addr.empty()) throw Failure{kDiagnostics, "env needs --manager or CHORAD_MANAGER"};
            return cmd_env(manager_addr, env_args);
        }
        if (*publish) return cmd_publish(file, server_addr);
        if (*sim) return cmd_sim(sim_args);
        if (*functions) return cmd_functions(port, table, buffer, buffer_set);
        if (*corpus_cmd) return cmd_corpus_export(out_dir);
    } catch (const Failure& f) {
        if (!f.message.empty()) std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kDiagnostics;
}
