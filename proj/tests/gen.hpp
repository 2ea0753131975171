#pragma once

// Random small choreographies for property tests. Programs are emitted as
// source text and filtered through the checker, so "connected" means whatever
// check_program accepts.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chorad/check.hpp"
#include "chorad/parser.hpp"

namespace chorad::testgen {

struct GenOptions {
    int max_actions = 6;
    int max_roles = 3;
};

class ProgramGen {
public:
    ProgramGen(std::uint64_t seed, GenOptions opts = {}) : rng_(seed), opts_(opts) {}

    /// One random program; not necessarily connected.
    std::string next()
    {
        const int nroles = 2 + pick(opts_.max_roles - 1);
        roles_.assign(kRoles, kRoles + nroles);
        budget_ = 1 + pick(opts_.max_actions);
        last_ = roles_[0];
        counter_ = 0;
        std::string body = block(0);
        return "preamble { starter: " + roles_[0] + " }\naioc {\n" + body + "\n}\n";
    }

    /// Next program accepted by the checker, trying at most `attempts` candidates.
    std::optional<std::string> next_connected(int attempts = 200)
    {
        for (int i = 0; i < attempts; ++i) {
            auto src = next();
            auto parsed = parse_program(src);
            if (!parsed.ok()) continue;
            if (!has_errors(check_program(*parsed.value))) return src;
        }
        return std::nullopt;
    }

private:
    static constexpr const char* kRoles[] = {"a", "b", "c"};

    int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
    bool coin(int percent) { return pick(100) < percent; }

    std::string role_near()
    {
        // Mostly continue from the last active role so that sequences tend to connect.
        if (coin(75)) return last_;
        return roles_[pick(static_cast<int>(roles_.size()))];
    }

    std::string other(const std::string& r)
    {
        std::string o;
        do o = roles_[pick(static_cast<int>(roles_.size()))];
        while (o == r);
        return o;
    }

    std::string interaction()
    {
        --budget_;
        const auto s = role_near();
        const auto r = other(s);
        last_ = r;
        return "m" + std::to_string(pick(3)) + ": " + s + "( " + std::to_string(pick(10)) + " ) -> " + r + "( v" +
               std::to_string(pick(2)) + " )";
    }

    std::string assignment()
    {
        --budget_;
        const auto r = role_near();
        last_ = r;
        return "v" + std::to_string(pick(2)) + "@" + r + " = " + std::to_string(pick(10));
    }

    std::string stmt(int depth)
    {
        const int k = pick(depth >= 2 || budget_ < 2 ? 2 : 6);
        switch (k) {
        case 0: return interaction();
        case 1: return assignment();
        case 2: {
            const auto r = role_near();
            --budget_;
            last_ = r;
            std::string out = "if( " + std::string(coin(50) ? "true" : "false") + " )@" + r + " {\n" + block(depth + 1) + "\n}";
            last_ = r;
            if (coin(50) && budget_ > 0) out += " else {\n" + block(depth + 1) + "\n}";
            return out;
        }
        case 3: {
            if (budget_ < 3) return interaction();
            const auto r = role_near();
            const auto w = "w" + std::to_string(counter_++);
            budget_ -= 2;
            last_ = r;
            std::string body = block(depth + 1);
            return w + "@" + r + " = 0;\nwhile( " + w + " < 2 )@" + r + " {\n" + body + ";\n" + w + "@" + r + " = " + w +
                   " + 1\n}";
        }
        case 4: {
            const auto start = last_;
            std::string left = interaction();
            last_ = start;
            std::string right = budget_ > 0 ? interaction() : assignment();
            return "{ " + left + " | " + right + " }";
        }
        default: {
            const auto r = role_near();
            last_ = r;
            return "scope @" + r + " {\n" + block(depth + 1) + "\n} prop { N.k = " + std::to_string(pick(3)) + " }";
        }
        }
    }

    std::string block(int depth)
    {
        std::string out = stmt(depth);
        while (budget_ > 0 && coin(70)) out += ";\n" + stmt(depth);
        return out;
    }

    std::mt19937_64 rng_;
    GenOptions opts_;
    std::vector<std::string> roles_;
    std::string last_;
    int budget_ = 0;
    int counter_ = 0;
};

}  // namespace chorad::testgen
