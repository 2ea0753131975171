#include "chorad/host.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "chorad/net.hpp"

namespace chorad {

namespace {

using Clock = std::chrono::steady_clock;

class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(const Message& m) = 0;
};

std::mutex& console_mutex()
{
    static std::mutex mu;
    return mu;
}

class HostEffects : public Effects {
public:
    HostEffects(Transport& t, const HostOptions& opts) : transport_(t), opts_(opts) {}

    void post(Message m) override { transport_.send(m); }

    Value call_external(const std::string& fn, const std::string& address, const std::vector<Value>& args) override
    {
        try {
            if (opts_.remote_functions) return call_function_remote(address, fn, args, opts_.call_timeout_ms);
            return opts_.functions.call(fn, args);
        } catch (const std::exception& e) {
            throw RuntimeError(std::string("external call failed: ") + e.what());
        }
    }

    MatchResponse match_scope(const MatchRequest& req) override
    {
        if (opts_.embedded_manager) return opts_.embedded_manager->match_scope(req).response;
        if (opts_.manager.empty()) return {};
        try {
            return ManagerClient(opts_.manager, opts_.call_timeout_ms).match(req);
        } catch (const std::exception& e) {
            spdlog::warn("scope {}: adaptation manager unavailable ({}); running the default body", req.scope_id,
                         e.what());
            return {};
        }
    }

    std::optional<std::string> prompt(const Role& role, const std::string& text) override
    {
        std::lock_guard lock(console_mutex());
        std::cout << "[" << role << "] " << text << " " << std::flush;
        std::string line;
        if (!std::getline(std::cin, line)) return std::nullopt;
        return line;
    }

    void trace(const TraceEvent& ev) override
    {
        spdlog::debug("{} t{} {} {} {} {}", ev.role, ev.task, ev.action, ev.op, ev.peer, ev.detail);
    }

private:
    Transport& transport_;
    const HostOptions& opts_;
};

class RoleHost {
public:
    RoleHost(std::shared_ptr<const RoleSetup> setup, Transport& t, const HostOptions& opts, std::atomic<bool>& abort)
        : machine_(std::move(setup)), fx_(t, opts), opts_(opts), abort_(abort)
    {
    }

    void deliver(Message m)
    {
        {
            std::lock_guard lock(mu_);
            inbox_.push_back(std::move(m));
        }
        cv_.notify_all();
    }

    void wake()
    {
        std::lock_guard lock(mu_);
        cv_.notify_all();
    }

    void run()
    {
        const auto idle = std::chrono::milliseconds(opts_.idle_timeout_ms);
        auto last = Clock::now();
        std::size_t rr = 0;
        while (!machine_.finished()) {
            if (abort_) throw RuntimeError("role '" + machine_.role() + "': aborted because another role failed");
            drain();
            const auto tasks = machine_.enabled_tasks();
            if (tasks.empty()) {
                std::unique_lock lock(mu_);
                const bool woke = cv_.wait_until(lock, last + idle, [&] { return !inbox_.empty() || abort_; });
                if (!woke) {
                    std::string what;
                    for (const auto& b : machine_.blocked_on()) what += (what.empty() ? "" : "; ") + b;
                    throw RuntimeError("role '" + machine_.role() + "': no progress for " +
                                       std::to_string(opts_.idle_timeout_ms) + " ms (" + what + ")");
                }
                continue;
            }
            machine_.step(tasks[rr++ % tasks.size()], fx_);
            last = Clock::now();
        }
    }

    const RoleMachine& machine() const { return machine_; }

private:
    void drain()
    {
        std::deque<Message> pending;
        {
            std::lock_guard lock(mu_);
            pending.swap(inbox_);
        }
        for (auto& m : pending) machine_.deliver(std::move(m));
    }

    RoleMachine machine_;
    HostEffects fx_;
    const HostOptions& opts_;
    std::atomic<bool>& abort_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Message> inbox_;
};

class InProcessTransport : public Transport {
public:
    std::map<Role, RoleHost*> hosts;

    void send(const Message& m) override
    {
        auto it = hosts.find(m.to);
        if (it == hosts.end()) throw RuntimeError("message to unknown role '" + m.to + "'");
        it->second->deliver(m);
    }
};

class TcpTransport : public Transport {
public:
    TcpTransport(std::map<Role, std::string> locations, int connect_timeout_ms)
        : locations_(std::move(locations)), timeout_ms_(connect_timeout_ms)
    {
    }

    void send(const Message& m) override
    {
        std::lock_guard lock(mu_);
        auto loc = locations_.find(m.to);
        if (loc == locations_.end()) throw RuntimeError("no location for role '" + m.to + "'");
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                auto& conn = conns_[m.to];
                if (!conn.open()) conn = LineConnection::connect(parse_address(loc->second), timeout_ms_);
                conn.send(to_json(m));
                return;
            } catch (const NetError& e) {
                conns_.erase(m.to);
                if (attempt == 1) throw RuntimeError("transport to '" + m.to + "' failed: " + e.what());
            }
        }
    }

private:
    std::map<Role, std::string> locations_;
    int timeout_ms_;
    std::mutex mu_;
    std::map<Role, LineConnection> conns_;
};

std::optional<std::vector<std::string>> script_for(const HostOptions& opts, const Role& role)
{
    auto it = opts.scripts.find(role);
    if (it != opts.scripts.end()) return it->second;
    if (opts.scripted) return std::vector<std::string>{};
    return std::nullopt;
}

void collect(RunResult& out, const RoleMachine& m)
{
    out.final_states[m.role()] = m.store();
    for (const auto& a : m.applied_rules()) out.applied_rules.push_back(a);
}

}  // namespace

RunResult run_all(const ProjectedApp& app, const HostOptions& opts)
{
    InProcessTransport transport;
    std::atomic<bool> abort{false};
    std::vector<std::unique_ptr<RoleHost>> hosts;
    for (const auto& role : app.roles()) {
        hosts.push_back(
            std::make_unique<RoleHost>(make_role_setup(app, role, script_for(opts, role)), transport, opts, abort));
        transport.hosts[role] = hosts.back().get();
    }

    RunResult out;
    std::mutex err_mu;
    std::vector<std::thread> threads;
    for (auto& h : hosts) {
        threads.emplace_back([&, host = h.get()] {
            try {
                host->run();
            } catch (const std::exception& e) {
                {
                    std::lock_guard lock(err_mu);
                    if (out.ok) {
                        out.ok = false;
                        out.error = e.what();
                    }
                }
                abort = true;
                for (auto& other : hosts) other->wake();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& h : hosts) collect(out, h->machine());
    return out;
}

RunResult run_role(const ProjectedApp& app, const Role& role, const std::string& listen, const HostOptions& opts)
{
    if (!app.per_role.count(role)) throw RuntimeError("role '" + role + "' does not occur in the application");
    const std::string address = listen.empty() ? app.locations.at(role) : listen;

    TcpTransport transport(app.locations, opts.idle_timeout_ms);
    std::atomic<bool> abort{false};
    RoleHost host(make_role_setup(app, role, script_for(opts, role)), transport, opts, abort);
    LineServer inbound(parse_address(address).port, [&](const Json& j) -> std::optional<Json> {
        try {
            host.deliver(message_from_json(j));
        } catch (const std::exception& e) {
            spdlog::error("role {}: dropped malformed message: {}", role, e.what());
        }
        return std::nullopt;
    });
    spdlog::info("role {} listening on port {}", role, inbound.port());

    RunResult out;
    try {
        host.run();
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    inbound.stop();
    collect(out, host.machine());
    return out;
}

}  // namespace chorad
