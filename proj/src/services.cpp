#include "chorad/services.hpp"

#include <set>

namespace chorad {

namespace {

const std::set<std::string> kKinds = {"fixed", "shift", "bufferGet", "bufferSet", "prefix", "arith", "sequence"};

void need_args(const std::string& name, const std::vector<Value>& args, std::size_t n)
{
    if (args.size() != n)
        throw FunctionError(name + " expects " + std::to_string(n) + " argument(s), got " + std::to_string(args.size()));
}

std::size_t index_arg(const std::string& name, const Value& v, std::size_t size)
{
    if (!v.is_int()) throw FunctionError(name + ": index must be an integer, got '" + v.render() + "'");
    if (v.as_int() < 0 || static_cast<std::size_t>(v.as_int()) >= size)
        throw FunctionError(name + ": index " + v.render() + " out of range for buffer of length " +
                            std::to_string(size));
    return static_cast<std::size_t>(v.as_int());
}

char letter_arg(const std::string& name, const Value& v)
{
    const std::string s = v.render();
    if (s.size() != 1 || s[0] < 'a' || s[0] > 'z')
        throw FunctionError(name + ": expected a single letter a-z, got '" + s + "'");
    return s[0];
}

}  // namespace

char shift_letter(char c, int by)
{
    const int k = ((c - 'a' + by) % 26 + 26) % 26;
    return static_cast<char>('a' + k);
}

FunctionTable::FunctionTable() : state_(std::make_shared<State>()) {}

FunctionTable FunctionTable::standard(const std::string& buffer, bool free_day)
{
    FunctionTable t;
    for (const char* timer : {"start", "end", "startTimer", "stopTimer", "endTimer"})
        t.define(timer, {{"kind", "fixed"}, {"value", 0}});
    t.define("isFreeDay", {{"kind", "fixed"}, {"value", free_day}});
    t.define("hasFreeWeek", {{"kind", "fixed"}, {"value", false}});
    t.define("getTicket", {{"kind", "prefix"}, {"prefix", "TICKET-"}});
    t.define("getWeather", {{"kind", "fixed"}, {"value", "Clear"}});
    t.define("getNext", {{"kind", "shift"}, {"by", 1}});
    t.define("getDoubleNext", {{"kind", "shift"}, {"by", 2}});
    t.define("getNthChar", {{"kind", "bufferGet"}});
    t.define("setNthChar", {{"kind", "bufferSet"}});
    t.set_buffer(buffer);
    return t;
}

FunctionTable FunctionTable::from_json(const Json& j)
{
    FunctionTable t;
    if (!j.is_object()) throw FunctionError("function table must be a JSON object");
    const Json fns = j.value("functions", Json::object());
    for (const auto& [name, spec] : fns.items()) t.define(name, spec);
    t.set_buffer(j.value("buffer", ""));
    return t;
}

Json FunctionTable::to_json() const
{
    Json fns = Json::object();
    for (const auto& [name, spec] : specs_) fns[name] = spec;
    return {{"functions", fns}, {"buffer", buffer()}};
}

void FunctionTable::define(const std::string& name, Json spec)
{
    if (!spec.is_object() || !kKinds.count(spec.value("kind", "")))
        throw FunctionError("function '" + name + "': unknown behaviour " + spec.dump());
    specs_[name] = std::move(spec);
}

std::vector<std::string> FunctionTable::names() const
{
    std::vector<std::string> out;
    for (const auto& [name, _] : specs_) out.push_back(name);
    return out;
}

Value FunctionTable::call(const std::string& name, const std::vector<Value>& args) const
{
    auto it = specs_.find(name);
    if (it == specs_.end()) throw FunctionError("unknown function '" + name + "'");
    const Json& spec = it->second;
    const std::string kind = spec.at("kind");

    if (kind == "fixed") return Value::from_json(spec.at("value"));
    if (kind == "shift") {
        need_args(name, args, 1);
        return Value(std::string(1, shift_letter(letter_arg(name, args[0]), spec.value("by", 1))));
    }
    if (kind == "prefix") {
        need_args(name, args, 1);
        return Value(spec.value("prefix", "") + args[0].render());
    }
    if (kind == "arith") {
        need_args(name, args, 2);
        if (!args[0].is_int() || !args[1].is_int()) throw FunctionError(name + ": integer arguments required");
        const std::string op = spec.value("op", "+");
        const auto a = args[0].as_int(), b = args[1].as_int();
        if (op == "+") return Value(a + b);
        if (op == "-") return Value(a - b);
        if (op == "*") return Value(a * b);
        throw FunctionError(name + ": unsupported operator '" + op + "'");
    }

    std::lock_guard lock(state_->mu);
    if (kind == "bufferGet") {
        need_args(name, args, 1);
        return Value(std::string(1, state_->buffer[index_arg(name, args[0], state_->buffer.size())]));
    }
    if (kind == "bufferSet") {
        need_args(name, args, 2);
        const std::size_t i = index_arg(name, args[0], state_->buffer.size());
        const std::string c = args[1].render();
        if (c.size() != 1) throw FunctionError(name + ": expected a single character, got '" + c + "'");
        state_->buffer[i] = c[0];
        return Value(0);
    }
    // sequence
    const Json& values = spec.at("values");
    if (!values.is_array() || values.empty()) throw FunctionError(name + ": empty sequence");
    std::size_t& pos = state_->positions[name];
    const Value v = Value::from_json(values.at(std::min(pos, values.size() - 1)));
    ++pos;
    return v;
}

std::string FunctionTable::buffer() const
{
    std::lock_guard lock(state_->mu);
    return state_->buffer;
}

void FunctionTable::set_buffer(std::string b)
{
    std::lock_guard lock(state_->mu);
    state_->buffer = std::move(b);
}

FunctionTable FunctionTable::clone() const
{
    FunctionTable t;
    t.specs_ = specs_;
    std::lock_guard lock(state_->mu);
    t.state_->buffer = state_->buffer;
    t.state_->positions = state_->positions;
    return t;
}

}  // namespace chorad
