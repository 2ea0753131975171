#include "chorad/message.hpp"

#include <array>
#include <stdexcept>

namespace chorad {

namespace {

constexpr std::array<std::pair<MessageKind, const char*>, 11> kKindNames{{
    {MessageKind::Msg, "msg"},
    {MessageKind::Ack, "ack"},
    {MessageKind::Ready, "ready"},
    {MessageKind::Start, "start"},
    {MessageKind::Directive, "directive"},
    {MessageKind::Done, "done"},
    {MessageKind::MatchReq, "matchReq"},
    {MessageKind::MatchResp, "matchResp"},
    {MessageKind::EnvOp, "envOp"},
    {MessageKind::Register, "register"},
    {MessageKind::Publish, "publish"},
}};

}  // namespace

const char* to_string(MessageKind k)
{
    for (const auto& [kind, name] : kKindNames)
        if (kind == k) return name;
    return "?";
}

std::optional<MessageKind> message_kind_from_string(const std::string& s)
{
    for (const auto& [kind, name] : kKindNames)
        if (s == name) return kind;
    return std::nullopt;
}

Json to_json(const Message& m)
{
    Json j = {{"kind", to_string(m.kind)}, {"seq", m.seq}, {"from", m.from}, {"to", m.to}};
    if (!m.op.empty() || m.kind == MessageKind::Msg || m.kind == MessageKind::Ack) j["op"] = m.op;
    if (!m.data.is_null()) j["data"] = m.data;
    return j;
}

Message message_from_json(const Json& j)
{
    if (!j.is_object()) throw std::invalid_argument("message is not a JSON object");
    for (const char* field : {"kind", "seq", "from", "to"})
        if (!j.contains(field)) throw std::invalid_argument(std::string("message lacks field '") + field + "'");
    auto kind = message_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown message kind '" + j.at("kind").get<std::string>() + "'");
    Message m;
    m.kind = *kind;
    m.seq = j.at("seq").get<std::uint64_t>();
    m.from = j.at("from").get<std::string>();
    m.to = j.at("to").get<std::string>();
    m.op = j.value("op", "");
    if (j.contains("data")) m.data = j.at("data");
    if ((m.kind == MessageKind::Msg || m.kind == MessageKind::Ack) && !j.contains("op"))
        throw std::invalid_argument("msg/ack lacks field 'op'");
    return m;
}

// ---------------------------------------------------------------------------

void Mailbox::push(Message m)
{
    Key key{static_cast<int>(m.kind), m.op, m.from};
    queues_[key].push_back(std::move(m));
    ++size_;
}

bool Mailbox::has(MessageKind kind, const std::string& op, const std::string& from) const
{
    auto it = queues_.find(Key{static_cast<int>(kind), op, from});
    return it != queues_.end() && !it->second.empty();
}

std::optional<Message> Mailbox::take(MessageKind kind, const std::string& op, const std::string& from)
{
    auto it = queues_.find(Key{static_cast<int>(kind), op, from});
    if (it == queues_.end() || it->second.empty()) return std::nullopt;
    Message m = std::move(it->second.front());
    it->second.pop_front();
    if (it->second.empty()) queues_.erase(it);
    --size_;
    return m;
}

std::vector<Message> Mailbox::pending() const
{
    std::vector<Message> out;
    for (const auto& [_, q] : queues_) out.insert(out.end(), q.begin(), q.end());
    return out;
}

std::string Mailbox::digest() const
{
    std::string s;
    for (const auto& [key, q] : queues_) {
        for (const auto& m : q) {
            s += to_string(m.kind);
            s += '|' + m.op + '|' + m.from + '|' + m.data.dump() + ';';
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

Json to_json(const MatchRequest& r)
{
    return {{"kind", "matchReq"},      {"scopeId", r.scope_id},        {"props", store_to_json(r.props)},
            {"vars", store_to_json(r.vars)}, {"coordinator", r.coordinator}, {"involved", r.involved}};
}

MatchRequest match_request_from_json(const Json& j)
{
    MatchRequest r;
    r.scope_id = j.value("scopeId", "");
    r.props = store_from_json(j.value("props", Json::object()));
    r.vars = store_from_json(j.value("vars", Json::object()));
    r.coordinator = j.value("coordinator", "");
    r.involved = j.value("involved", std::vector<Role>{});
    return r;
}

Json to_json(const MatchResponse& r)
{
    if (!r.match) return {{"kind", "matchResp"}, {"match", false}};
    return {{"kind", "matchResp"},
            {"match", true},
            {"ruleId", r.rule_id},
            {"body", r.body},
            {"includes", includes_to_json(r.includes)}};
}

MatchResponse match_response_from_json(const Json& j)
{
    MatchResponse r;
    r.match = j.value("match", false);
    if (!r.match) return r;
    r.rule_id = j.value("ruleId", "");
    r.body = j.value("body", "");
    r.includes = includes_from_json(j.value("includes", Json::array()));
    return r;
}

}  // namespace chorad
