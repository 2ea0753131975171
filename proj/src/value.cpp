#include "chorad/value.hpp"

namespace chorad {

std::string quote_string(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string Value::render() const
{
    if (is_int()) return std::to_string(as_int());
    if (is_bool()) return as_bool() ? "true" : "false";
    return as_string();
}

std::string Value::literal() const
{
    if (is_string()) return quote_string(as_string());
    return render();
}

Json Value::to_json() const
{
    if (is_int()) return as_int();
    if (is_bool()) return as_bool();
    return as_string();
}

Value Value::from_json(const Json& j)
{
    if (j.is_boolean()) return Value(j.get<bool>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    if (j.is_string()) return Value(j.get<std::string>());
    if (j.is_number()) return Value(static_cast<std::int64_t>(j.get<double>()));
    if (j.is_null()) return Value(std::string());
    throw std::invalid_argument("unsupported JSON value: " + j.dump());
}

Json store_to_json(const Store& s)
{
    Json j = Json::object();
    for (const auto& [k, v] : s) j[k] = v.to_json();
    return j;
}

Store store_from_json(const Json& j)
{
    Store s;
    if (j.is_null()) return s;
    for (const auto& [k, v] : j.items()) s.emplace(k, Value::from_json(v));
    return s;
}

}  // namespace chorad
