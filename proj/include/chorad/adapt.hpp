#pragma once

// Adaptation middleware: environment, rule servers and the manager that
// resolves scope match requests by (server registration, rule publication)
// order. Transport-agnostic; net.hpp wraps these in TCP services.

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "chorad/ast.hpp"
#include "chorad/message.hpp"

namespace chorad {

class Environment {
public:
    Environment() = default;
    Environment(const Environment& other) : entries_(other.snapshot()) {}
    Environment& operator=(const Environment&) = delete;

    void set(const std::string& key, Value v);
    Store snapshot() const;

private:
    mutable std::mutex mu_;
    Store entries_;
};

/// Absent references (in their namespace) and non-boolean results give false.
bool evaluate_condition(const Expr& cond, const PropertySet& props, const Store& vars, const Store& env);

struct RuleEntry {
    std::string rule_id;
    Rule rule;
    std::string body_source;
    std::uint64_t published_at = 0;
};

struct PublishResult {
    std::vector<std::string> rule_ids;
    std::vector<std::string> diagnostics;  ///< formatted; non-empty means rejected

    bool ok() const { return diagnostics.empty(); }
};

class AdaptationServer {
public:
    explicit AdaptationServer(std::string id) : id_(std::move(id)) {}
    AdaptationServer(const AdaptationServer& other);
    AdaptationServer& operator=(const AdaptationServer&) = delete;

    const std::string& id() const { return id_; }

    /// All-or-nothing: a file with any rejected rule stores nothing.
    PublishResult publish(const std::string& source, const std::string& file = "rules");

    /// First rule in publication order that is applicable and whose roles fit the scope.
    MatchResponse match(const MatchRequest& req, const Store& env) const;

    std::size_t rule_count() const;

private:
    std::string id_;
    mutable std::mutex mu_;
    std::vector<RuleEntry> rules_;
    std::uint64_t next_ = 0;
};

/// A server as seen by the manager. Throws std::runtime_error when unreachable.
class ServerEndpoint {
public:
    virtual ~ServerEndpoint() = default;
    virtual MatchResponse match(const MatchRequest& req, const Store& env) = 0;
};

class LocalServerEndpoint : public ServerEndpoint {
public:
    explicit LocalServerEndpoint(std::shared_ptr<AdaptationServer> s) : server_(std::move(s)) {}
    MatchResponse match(const MatchRequest& req, const Store& env) override { return server_->match(req, env); }

private:
    std::shared_ptr<AdaptationServer> server_;
};

struct MatchOutcome {
    MatchResponse response;
    int servers_queried = 0;
    int servers_skipped = 0;
};

class AdaptationManager {
public:
    explicit AdaptationManager(std::shared_ptr<Environment> env = std::make_shared<Environment>())
        : env_(std::move(env))
    {
    }

    /// Returns the registry position. Re-registering an address moves it to the tail.
    std::size_t register_server(const std::string& address, std::shared_ptr<ServerEndpoint> endpoint);
    void deregister_server(const std::string& address);
    std::vector<std::string> registry() const;

    MatchOutcome match_scope(const MatchRequest& req) const;

    Environment& environment() { return *env_; }
    const std::shared_ptr<Environment>& environment_ptr() const { return env_; }

private:
    struct Entry {
        std::string address;
        std::shared_ptr<ServerEndpoint> endpoint;
    };
    std::shared_ptr<Environment> env_;
    mutable std::mutex mu_;
    std::vector<Entry> servers_;
};

}  // namespace chorad
