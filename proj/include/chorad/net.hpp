#pragma once

// Newline-delimited JSON over TCP, plus the middleware and function services
// built on it.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "chorad/adapt.hpp"
#include "chorad/services.hpp"

namespace chorad {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Endpoint {
    std::string host;
    int port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

/// Accepts "socket://host:port", "host:port" and ":port" (localhost).
Endpoint parse_address(const std::string& address);

class LineConnection {
public:
    LineConnection() = default;
    explicit LineConnection(int fd) : fd_(fd) {}
    LineConnection(LineConnection&& o) noexcept;
    LineConnection& operator=(LineConnection&& o) noexcept;
    LineConnection(const LineConnection&) = delete;
    LineConnection& operator=(const LineConnection&) = delete;
    ~LineConnection();

    /// Retries refused connections until `timeout_ms` elapses.
    static LineConnection connect(const Endpoint& ep, int timeout_ms);

    bool open() const { return fd_ >= 0; }
    void send(const Json& j);
    /// nullopt on orderly EOF; NetError on timeout or malformed input.
    std::optional<Json> receive(int timeout_ms);
    Json request(const Json& j, int timeout_ms);
    void close();
    int fd() const { return fd_; }

private:
    int fd_ = -1;
    std::string buf_;
};

/// Thread-per-connection line server. A handler returning nullopt sends no reply.
class LineServer {
public:
    using Handler = std::function<std::optional<Json>(const Json&)>;

    /// port 0 binds an ephemeral port.
    LineServer(int port, Handler handler);
    ~LineServer();
    LineServer(const LineServer&) = delete;
    LineServer& operator=(const LineServer&) = delete;

    int port() const { return port_; }
    void stop();

private:
    void accept_loop();
    void serve(int fd);

    int listen_fd_ = -1;
    int port_ = 0;
    Handler handler_;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::vector<std::thread> workers_;
    std::vector<int> client_fds_;
};

Json error_reply(const std::string& message);

// --- external functions ----------------------------------------------------

Value call_function_remote(const std::string& address, const std::string& fn, const std::vector<Value>& args,
                           int timeout_ms);
Json handle_function_request(const FunctionTable& table, const Json& req);

// --- middleware clients ------------------------------------------------------

class RemoteServerEndpoint : public ServerEndpoint {
public:
    RemoteServerEndpoint(std::string address, int timeout_ms) : address_(std::move(address)), timeout_ms_(timeout_ms) {}
    MatchResponse match(const MatchRequest& req, const Store& env) override;

private:
    std::string address_;
    int timeout_ms_;
};

class ManagerClient {
public:
    ManagerClient(std::string address, int timeout_ms) : address_(std::move(address)), timeout_ms_(timeout_ms) {}

    MatchResponse match(const MatchRequest& req);
    void env_set(const std::string& key, const Value& v);
    Store env_get();
    std::size_t register_server(const std::string& server_address);

private:
    Json call(const Json& req);
    std::string address_;
    int timeout_ms_;
};

PublishResult publish_remote(const std::string& server_address, const std::string& source, int timeout_ms);

// --- services ------------------------------------------------------------------

/// Manager plus the environment it hosts.
class ManagerService {
public:
    ManagerService(int port, int timeout_ms = 5000);
    int port() const { return server_.port(); }
    AdaptationManager& manager() { return *manager_; }
    Json handle(const Json& req);

private:
    std::shared_ptr<AdaptationManager> manager_;
    int timeout_ms_;
    LineServer server_;
};

class ServerService {
public:
    ServerService(int port, std::string id);
    int port() const { return server_.port(); }
    AdaptationServer& rules() { return *rules_; }
    Json handle(const Json& req);

private:
    std::shared_ptr<AdaptationServer> rules_;
    LineServer server_;
};

class FunctionService {
public:
    FunctionService(int port, FunctionTable table);
    int port() const { return server_.port(); }

private:
    FunctionTable table_;
    LineServer server_;
};

}  // namespace chorad
