#pragma once

// Wire-level units shared by roles and the adaptation middleware. Every
// message travels as one newline-delimited JSON object.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "chorad/ast.hpp"

namespace chorad {

enum class MessageKind {
    Msg,
    Ack,
    Ready,
    Start,
    Directive,
    Done,
    MatchReq,
    MatchResp,
    EnvOp,
    Register,
    Publish,
};

const char* to_string(MessageKind k);
std::optional<MessageKind> message_kind_from_string(const std::string& s);

struct Message {
    MessageKind kind = MessageKind::Msg;
    std::string op;
    std::string from;
    std::string to;
    Json data;
    std::uint64_t seq = 0;
};

Json to_json(const Message& m);
/// Throws std::invalid_argument on a malformed object.
Message message_from_json(const Json& j);

/// Pending messages of one role, matched on the exact (kind, op, from) key, FIFO within a key.
class Mailbox {
public:
    void push(Message m);
    bool has(MessageKind kind, const std::string& op, const std::string& from) const;
    std::optional<Message> take(MessageKind kind, const std::string& op, const std::string& from);

    bool empty() const { return size_ == 0; }
    std::size_t size() const { return size_; }
    std::vector<Message> pending() const;
    /// Stable textual summary for state hashing.
    std::string digest() const;

private:
    using Key = std::tuple<int, std::string, std::string>;
    std::map<Key, std::deque<Message>> queues_;
    std::size_t size_ = 0;
};

struct MatchRequest {
    std::string scope_id;
    PropertySet props;
    Store vars;
    Role coordinator;
    std::vector<Role> involved;
};

struct MatchResponse {
    bool match = false;
    std::string rule_id;
    std::string body;
    std::vector<Include> includes;
};

Json to_json(const MatchRequest& r);
MatchRequest match_request_from_json(const Json& j);
Json to_json(const MatchResponse& r);
MatchResponse match_response_from_json(const Json& j);

}  // namespace chorad
