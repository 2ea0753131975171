#pragma once

// Stub external functions. A table maps function names to JSON behaviour
// specs so the same table can be built in code, loaded from a file, or served
// over the external-function protocol.
//
//   {"kind":"fixed","value":V}          returns V
//   {"kind":"shift","by":k}             letter a–z moved k places, wrapping
//   {"kind":"bufferGet"}                (i) -> i-th char of the shared buffer
//   {"kind":"bufferSet"}                (i, c) -> writes c at i, returns 0
//   {"kind":"prefix","prefix":P}        (x) -> P + x
//   {"kind":"arith","op":"+"|"-"|"*"}   (x, y) -> x op y
//   {"kind":"sequence","values":[...]}  successive values, repeating the last

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "chorad/value.hpp"

namespace chorad {

class FunctionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FunctionTable {
public:
    FunctionTable();

    /// Every function the corpus uses. Timer functions are no-ops returning 0.
    static FunctionTable standard(const std::string& buffer = "", bool free_day = true);
    /// {"functions": {name: spec, ...}, "buffer": "..."}
    static FunctionTable from_json(const Json& j);
    Json to_json() const;

    /// Throws FunctionError on an unknown kind.
    void define(const std::string& name, Json spec);
    bool has(const std::string& name) const { return specs_.count(name) > 0; }
    std::vector<std::string> names() const;

    /// Thread-safe. Throws FunctionError for unknown functions or bad arguments.
    Value call(const std::string& name, const std::vector<Value>& args) const;

    std::string buffer() const;
    void set_buffer(std::string b);

    /// Copy with independent mutable state (buffer, sequence positions).
    FunctionTable clone() const;

private:
    struct State {
        std::mutex mu;
        std::string buffer;
        std::map<std::string, std::size_t> positions;
    };
    std::map<std::string, Json> specs_;
    std::shared_ptr<State> state_;
};

/// Letter `c` moved `by` places through a–z with wraparound.
char shift_letter(char c, int by);

}  // namespace chorad
