#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

namespace chorad {

using Json = nlohmann::json;

/// Dynamically typed choreography value: integer, boolean or string.
class Value {
public:
    Value() : v_(std::int64_t{0}) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(std::int64_t{i}) {}
    Value(bool b) : v_(b) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}

    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }

    std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
    bool as_bool() const { return std::get<bool>(v_); }
    const std::string& as_string() const { return std::get<std::string>(v_); }

    /// Textual form used by string concatenation and cross-type equality.
    std::string render() const;
    /// Source-literal form (strings quoted and escaped).
    std::string literal() const;

    Json to_json() const;
    static Value from_json(const Json& j);

    friend bool operator==(const Value&, const Value&) = default;

private:
    std::variant<std::int64_t, bool, std::string> v_;
};

using Store = std::map<std::string, Value>;

Json store_to_json(const Store& s);
Store store_from_json(const Json& j);

std::string quote_string(const std::string& s);

}  // namespace chorad
