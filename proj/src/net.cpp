#include "chorad/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <spdlog/spdlog.h>

namespace chorad {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline)
{
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left > 0 ? static_cast<int>(left) : 0;
}

std::string errno_text() { return std::strerror(errno); }

bool write_all(int fd, const std::string& data)
{
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

Endpoint parse_address(const std::string& address)
{
    std::string a = address;
    if (auto p = a.find("://"); p != std::string::npos) a = a.substr(p + 3);
    while (!a.empty() && a.back() == '/') a.pop_back();
    const auto colon = a.rfind(':');
    if (colon == std::string::npos) throw NetError("address '" + address + "' lacks a port");
    Endpoint ep;
    ep.host = colon == 0 ? "localhost" : a.substr(0, colon);
    try {
        std::size_t used = 0;
        ep.port = std::stoi(a.substr(colon + 1), &used);
        if (used != a.size() - colon - 1 || ep.port < 0 || ep.port > 65535) throw std::invalid_argument("port");
    } catch (const std::exception&) {
        throw NetError("address '" + address + "' has an invalid port");
    }
    return ep;
}

// ---------------------------------------------------------------------------

LineConnection::LineConnection(LineConnection&& o) noexcept : fd_(o.fd_), buf_(std::move(o.buf_)) { o.fd_ = -1; }

LineConnection& LineConnection::operator=(LineConnection&& o) noexcept
{
    if (this != &o) {
        close();
        fd_ = o.fd_;
        buf_ = std::move(o.buf_);
        o.fd_ = -1;
    }
    return *this;
}

LineConnection::~LineConnection() { close(); }

void LineConnection::close()
{
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

LineConnection LineConnection::connect(const Endpoint& ep, int timeout_ms)
{
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res); rc != 0)
        throw NetError("cannot resolve " + ep.str() + ": " + gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

    std::string last = "timed out";
    while (true) {
        const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        if (fd < 0) throw NetError("socket: " + errno_text());
        if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return LineConnection(fd);
        }
        last = errno_text();
        ::close(fd);
        if (remaining_ms(deadline) == 0) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(std::min(50, remaining_ms(deadline))));
    }
    throw NetError("cannot connect to " + ep.str() + ": " + last);
}

void LineConnection::send(const Json& j)
{
    if (fd_ < 0) throw NetError("send on a closed connection");
    if (!write_all(fd_, j.dump() + "\n")) throw NetError("send failed: " + errno_text());
}

std::optional<Json> LineConnection::receive(int timeout_ms)
{
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        if (auto nl = buf_.find('\n'); nl != std::string::npos) {
            const std::string line = buf_.substr(0, nl);
            buf_.erase(0, nl + 1);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                return Json::parse(line);
            } catch (const Json::parse_error& e) {
                throw NetError(std::string("malformed JSON line: ") + e.what());
            }
        }
        if (fd_ < 0) return std::nullopt;
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, timeout_ms < 0 ? -1 : remaining_ms(deadline));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw NetError("poll: " + errno_text());
        }
        if (rc == 0) throw NetError("receive timed out");
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError("recv: " + errno_text());
        }
        if (n == 0) return std::nullopt;
        buf_.append(chunk, static_cast<std::size_t>(n));
    }
}

Json LineConnection::request(const Json& j, int timeout_ms)
{
    send(j);
    auto r = receive(timeout_ms);
    if (!r) throw NetError("connection closed before a reply arrived");
    return *r;
}

// ---------------------------------------------------------------------------

LineServer::LineServer(int port, Handler handler) : handler_(std::move(handler))
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw NetError("socket: " + errno_text());
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        const std::string why = errno_text();
        ::close(listen_fd_);
        throw NetError("cannot bind port " + std::to_string(port) + ": " + why);
    }
    ::listen(listen_fd_, 64);
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

LineServer::~LineServer() { stop(); }

void LineServer::stop()
{
    if (stopping_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

void LineServer::accept_loop()
{
    while (!stopping_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 100);
        if (rc <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mu_);
        if (stopping_) {
            ::close(fd);
            break;
        }
        client_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void LineServer::serve(int fd)
{
    LineConnection conn(fd);
    try {
        while (!stopping_) {
            std::optional<Json> req;
            try {
                req = conn.receive(-1);
            } catch (const NetError& e) {
                if (stopping_) break;
                conn.send(error_reply(e.what()));
                break;
            }
            if (!req) break;
            std::optional<Json> reply;
            try {
                reply = handler_(*req);
            } catch (const std::exception& e) {
                reply = error_reply(e.what());
            }
            if (reply) conn.send(*reply);
        }
    } catch (const NetError&) {
        // peer went away
    }
    std::lock_guard lock(mu_);
    std::erase(client_fds_, fd);
}

Json error_reply(const std::string& message) { return {{"kind", "error"}, {"message", message}}; }

// ---------------------------------------------------------------------------

Value call_function_remote(const std::string& address, const std::string& fn, const std::vector<Value>& args,
                           int timeout_ms)
{
    Json jargs = Json::array();
    for (const auto& a : args) jargs.push_back(a.to_json());
    auto conn = LineConnection::connect(parse_address(address), timeout_ms);
    const Json r = conn.request({{"kind", "call"}, {"fn", fn}, {"args", jargs}}, timeout_ms);
    const std::string kind = r.value("kind", "");
    if (kind == "result" && r.contains("value")) return Value::from_json(r.at("value"));
    if (kind == "error") throw NetError("function " + fn + ": " + r.value("message", "error"));
    throw NetError("function " + fn + ": malformed response " + r.dump());
}

Json handle_function_request(const FunctionTable& table, const Json& req)
{
    if (req.value("kind", "") != "call") return error_reply("expected kind 'call'");
    std::vector<Value> args;
    try {
        for (const auto& a : req.value("args", Json::array())) args.push_back(Value::from_json(a));
        return {{"kind", "result"}, {"value", table.call(req.value("fn", ""), args).to_json()}};
    } catch (const std::exception& e) {
        return error_reply(e.what());
    }
}

// ---------------------------------------------------------------------------

MatchResponse RemoteServerEndpoint::match(const MatchRequest& req, const Store& env)
{
    Json j = to_json(req);
    j["env"] = store_to_json(env);
    auto conn = LineConnection::connect(parse_address(address_), timeout_ms_);
    const Json r = conn.request(j, timeout_ms_);
    if (r.value("kind", "") != "matchResp") throw NetError("server " + address_ + ": " + r.value("message", r.dump()));
    return match_response_from_json(r);
}

Json ManagerClient::call(const Json& req)
{
    auto conn = LineConnection::connect(parse_address(address_), timeout_ms_);
    Json r = conn.request(req, timeout_ms_);
    if (r.value("kind", "") == "error") throw NetError("manager: " + r.value("message", "error"));
    return r;
}

MatchResponse ManagerClient::match(const MatchRequest& req) { return match_response_from_json(call(to_json(req))); }

void ManagerClient::env_set(const std::string& key, const Value& v)
{
    call({{"kind", "envSet"}, {"key", key}, {"value", v.to_json()}});
}

Store ManagerClient::env_get() { return store_from_json(call({{"kind", "envGet"}}).value("entries", Json::object())); }

std::size_t ManagerClient::register_server(const std::string& server_address)
{
    return call({{"kind", "register"}, {"address", server_address}}).value("position", std::size_t{0});
}

PublishResult publish_remote(const std::string& server_address, const std::string& source, int timeout_ms)
{
    auto conn = LineConnection::connect(parse_address(server_address), timeout_ms);
    const Json r = conn.request({{"kind", "publish"}, {"source", source}}, timeout_ms);
    if (r.value("kind", "") == "error") throw NetError("server: " + r.value("message", "error"));
    PublishResult out;
    out.rule_ids = r.value("ruleIds", std::vector<std::string>{});
    out.diagnostics = r.value("diagnostics", std::vector<std::string>{});
    return out;
}

// ---------------------------------------------------------------------------

ManagerService::ManagerService(int port, int timeout_ms)
    : manager_(std::make_shared<AdaptationManager>()),
      timeout_ms_(timeout_ms),
      server_(port, [this](const Json& j) -> std::optional<Json> { return handle(j); })
{
}

Json ManagerService::handle(const Json& req)
{
    const std::string kind = req.value("kind", "");
    if (kind == "register") {
        const std::string address = req.value("address", "");
        // a server must answer before it is accepted
        try {
            LineConnection::connect(parse_address(address), timeout_ms_);
        } catch (const NetError& e) {
            return error_reply(std::string("registration rejected: ") + e.what());
        }
        const auto pos = manager_->register_server(address, std::make_shared<RemoteServerEndpoint>(address, timeout_ms_));
        spdlog::info("manager: server {} registered at position {}", address, pos);
        return {{"kind", "registered"}, {"position", pos}};
    }
    if (kind == "matchReq") return to_json(manager_->match_scope(match_request_from_json(req)).response);
    if (kind == "envSet") {
        if (!req.contains("key") || !req.contains("value")) return error_reply("envSet needs key and value");
        manager_->environment().set(req.at("key").get<std::string>(), Value::from_json(req.at("value")));
        return {{"kind", "envAck"}};
    }
    if (kind == "envGet") return {{"kind", "envSnapshot"}, {"entries", store_to_json(manager_->environment().snapshot())}};
    return error_reply("unknown request kind '" + kind + "'");
}

ServerService::ServerService(int port, std::string id)
    : rules_(std::make_shared<AdaptationServer>(std::move(id))),
      server_(port, [this](const Json& j) -> std::optional<Json> { return handle(j); })
{
}

Json ServerService::handle(const Json& req)
{
    const std::string kind = req.value("kind", "");
    if (kind == "publish") {
        const PublishResult r = rules_->publish(req.value("source", ""), req.value("file", "rules"));
        return {{"kind", "published"}, {"ok", r.ok()}, {"ruleIds", r.rule_ids}, {"diagnostics", r.diagnostics}};
    }
    if (kind == "matchReq")
        return to_json(rules_->match(match_request_from_json(req), store_from_json(req.value("env", Json::object()))));
    return error_reply("unknown request kind '" + kind + "'");
}

FunctionService::FunctionService(int port, FunctionTable table)
    : table_(std::move(table)),
      server_(port, [this](const Json& j) -> std::optional<Json> { return handle_function_request(table_, j); })
{
}

}  // namespace chorad
