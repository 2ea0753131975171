#include "chorad/parser.hpp"

#include <cctype>
#include <charconv>
#include <set>

namespace chorad {

std::string format_diagnostic(const std::string& file, const Diagnostic& d)
{
    return file + ":" + std::to_string(d.line) + ":" + std::to_string(d.column) + ": " +
           (d.severity == Severity::Error ? "error" : "warning") + ": " + d.message;
}

namespace {

enum class Tok {
    Ident,
    Int,
    String,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Bar,
    Comma,
    Colon,
    At,
    Assign,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    Dot,
    Arrow,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    SourcePos pos;
};

struct ParseError {
    Diagnostic diag;
};

[[noreturn]] void fail(SourcePos pos, std::string msg)
{
    throw ParseError{Diagnostic{Severity::Error, std::move(msg), pos.line, pos.column}};
}

std::vector<Token> lex(std::string_view src)
{
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance();
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance();
            continue;
        }
        const SourcePos pos{line, col};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), pos});
            advance(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            out.push_back({Tok::Int, std::string(src.substr(i, j - i)), pos});
            advance(j - i);
            continue;
        }
        if (c == '"') {
            std::string s;
            advance();
            while (true) {
                if (i >= src.size()) fail(pos, "unterminated string literal");
                const char d = src[i];
                if (d == '"') {
                    advance();
                    break;
                }
                if (d == '\\') {
                    if (i + 1 >= src.size()) fail(pos, "unterminated string literal");
                    const char e = src[i + 1];
                    if (e != '"' && e != '\\') fail({line, col}, std::string("unknown escape sequence '\\") + e + "'");
                    s.push_back(e);
                    advance(2);
                    continue;
                }
                s.push_back(d);
                advance();
            }
            out.push_back({Tok::String, std::move(s), pos});
            continue;
        }
        auto two = [&](char a, char b) { return c == a && i + 1 < src.size() && src[i + 1] == b; };
        Tok k;
        std::size_t len = 1;
        if (two('=', '=')) k = Tok::Eq, len = 2;
        else if (two('!', '=')) k = Tok::Ne, len = 2;
        else if (two('<', '=')) k = Tok::Le, len = 2;
        else if (two('>', '=')) k = Tok::Ge, len = 2;
        else if (two('-', '>')) k = Tok::Arrow, len = 2;
        else {
            switch (c) {
            case '{': k = Tok::LBrace; break;
            case '}': k = Tok::RBrace; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case ';': k = Tok::Semi; break;
            case '|': k = Tok::Bar; break;
            case ',': k = Tok::Comma; break;
            case ':': k = Tok::Colon; break;
            case '@': k = Tok::At; break;
            case '=': k = Tok::Assign; break;
            case '<': k = Tok::Lt; break;
            case '>': k = Tok::Gt; break;
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '!': k = Tok::Bang; break;
            case '.': k = Tok::Dot; break;
            default: fail(pos, std::string("unexpected character '") + c + "'");
            }
        }
        out.push_back({k, std::string(src.substr(i, len)), pos});
        advance(len);
    }
    out.push_back({Tok::End, "", {line, col}});
    return out;
}

const std::set<std::string> kKeywords = {"include", "from",  "with",  "preamble", "starter", "location",
                                         "aioc",    "if",    "else",  "while",    "scope",   "prop",
                                         "skip",    "rule",  "on",    "do",       "and",     "or",
                                         "true",    "false"};

const std::set<std::string> kKnownProtocols = {"json", "sodep", "http", "soap"};

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(lex(text)) {}

    std::vector<Diagnostic> warnings;

    Program program()
    {
        Program p;
        while (is_kw("include")) p.includes.push_back(include());
        if (!is_kw("preamble")) fail(peek().pos, "expected 'preamble'");
        p.preamble = preamble();
        expect_kw("aioc");
        p.body = block();
        expect(Tok::End, "end of input");
        return p;
    }

    std::vector<Rule> rules()
    {
        std::vector<Rule> out;
        while (!at(Tok::End)) {
            Rule r;
            r.pos = peek().pos;
            expect_kw("rule");
            expect(Tok::LBrace, "'{'");
            while (is_kw("include")) r.includes.push_back(include());
            expect_kw("on");
            expect(Tok::LBrace, "'{'");
            r.condition = expr();
            expect(Tok::RBrace, "'}'");
            expect_kw("do");
            r.body = block();
            expect(Tok::RBrace, "'}'");
            out.push_back(std::move(r));
        }
        return out;
    }

    ExprPtr full_expr()
    {
        ExprPtr e = expr();
        expect(Tok::End, "end of input");
        return e;
    }

    BehaviourPtr full_behaviour()
    {
        BehaviourPtr b = at(Tok::End) ? make_skip(peek().pos) : par();
        expect(Tok::End, "end of input");
        return b;
    }

private:
    std::vector<Token> toks_;
    std::size_t p_ = 0;

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(p_ + k, toks_.size() - 1)]; }
    bool at(Tok k) const { return peek().kind == k; }
    bool is_kw(std::string_view kw) const { return at(Tok::Ident) && peek().text == kw; }
    Token next() { return toks_[p_ < toks_.size() - 1 ? p_++ : p_]; }

    static std::string describe(const Token& t)
    {
        if (t.kind == Tok::End) return "end of input";
        if (t.kind == Tok::String) return "string \"" + t.text + "\"";
        return "'" + t.text + "'";
    }

    Token expect(Tok k, std::string_view what)
    {
        if (!at(k)) fail(peek().pos, "expected " + std::string(what) + ", found " + describe(peek()));
        return next();
    }

    void expect_kw(std::string_view kw)
    {
        if (!is_kw(kw)) fail(peek().pos, "expected '" + std::string(kw) + "', found " + describe(peek()));
        next();
    }

    std::string ident(std::string_view what)
    {
        if (!at(Tok::Ident) || kKeywords.count(peek().text))
            fail(peek().pos, "expected " + std::string(what) + ", found " + describe(peek()));
        return next().text;
    }

    Include include()
    {
        Include inc;
        inc.pos = peek().pos;
        expect_kw("include");
        inc.functions.push_back(ident("function name"));
        while (at(Tok::Comma)) {
            next();
            inc.functions.push_back(ident("function name"));
        }
        expect_kw("from");
        inc.address = expect(Tok::String, "address string").text;
        if (is_kw("with")) {
            next();
            const Token t = peek();
            inc.protocol = ident("protocol name");
            if (!kKnownProtocols.count(inc.protocol))
                warnings.push_back({Severity::Warning, "unknown protocol '" + inc.protocol + "'", t.pos.line,
                                    t.pos.column});
        }
        return inc;
    }

    Preamble preamble()
    {
        Preamble pre;
        pre.pos = peek().pos;
        expect_kw("preamble");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
            if (is_kw("starter")) {
                const SourcePos pos = next().pos;
                expect(Tok::Colon, "':'");
                Role r = ident("role name");
                if (pre.starter) fail(pos, "duplicate starter declaration");
                pre.starter = std::move(r);
            } else if (is_kw("location")) {
                next();
                expect(Tok::At, "'@'");
                Role r = ident("role name");
                expect(Tok::Assign, "'='");
                pre.locations[r] = expect(Tok::String, "location string").text;
            } else {
                fail(peek().pos, "expected 'starter' or 'location', found " + describe(peek()));
            }
            if (at(Tok::Semi) || at(Tok::Comma)) next();
        }
        expect(Tok::RBrace, "'}'");
        return pre;
    }

    // block := '{' [par] '}'
    BehaviourPtr block()
    {
        const SourcePos pos = expect(Tok::LBrace, "'{'").pos;
        if (at(Tok::RBrace)) {
            next();
            return make_skip(pos);
        }
        BehaviourPtr b = par();
        expect(Tok::RBrace, "'}'");
        return b;
    }

    // par := seq ('|' seq)*   (right-nested)
    BehaviourPtr par()
    {
        const SourcePos pos = peek().pos;
        BehaviourPtr left = seq();
        if (!at(Tok::Bar)) return left;
        next();
        return make_par(std::move(left), par(), pos);
    }

    // seq := stmt (';' stmt)* [';']   (right-nested)
    BehaviourPtr seq()
    {
        const SourcePos pos = peek().pos;
        BehaviourPtr first = stmt();
        if (!at(Tok::Semi)) return first;
        next();
        if (at(Tok::RBrace) || at(Tok::End) || at(Tok::Bar)) return first;
        return make_seq(std::move(first), seq(), pos);
    }

    BehaviourPtr stmt()
    {
        const Token t = peek();
        if (t.kind == Tok::LBrace) return block();
        if (t.kind != Tok::Ident) fail(t.pos, "expected a statement, found " + describe(t));
        if (t.text == "skip") {
            next();
            return make_skip(t.pos);
        }
        if (t.text == "if") {
            next();
            ExprPtr g = paren_expr();
            expect(Tok::At, "'@'");
            Role r = ident("role name");
            BehaviourPtr then_b = block();
            BehaviourPtr else_b;
            if (is_kw("else")) {
                next();
                else_b = is_kw("if") ? stmt() : block();
            }
            return make_if(std::move(g), std::move(r), std::move(then_b), std::move(else_b), t.pos);
        }
        if (t.text == "while") {
            next();
            ExprPtr g = paren_expr();
            expect(Tok::At, "'@'");
            Role r = ident("role name");
            return make_while(std::move(g), std::move(r), block(), t.pos);
        }
        if (t.text == "scope") {
            next();
            expect(Tok::At, "'@'");
            Role c = ident("coordinator role");
            BehaviourPtr body = block();
            PropertySet props;
            if (is_kw("prop")) {
                next();
                props = prop_block();
            }
            return make_scope(std::move(c), std::move(body), std::move(props), t.pos);
        }
        const std::string name = ident("statement");
        if (at(Tok::Colon)) {
            next();
            Role sender = ident("sender role");
            expect(Tok::LParen, "'('");
            ExprPtr e = expr();
            expect(Tok::RParen, "')'");
            expect(Tok::Arrow, "'->'");
            const SourcePos rpos = peek().pos;
            Role receiver = ident("receiver role");
            expect(Tok::LParen, "'('");
            std::string var = ident("receiving variable");
            expect(Tok::RParen, "')'");
            if (sender == receiver)
                fail(rpos, "interaction '" + name + "' has the same sender and receiver '" + sender + "'");
            return make_interaction(name, std::move(sender), std::move(e), std::move(receiver), std::move(var),
                                    t.pos);
        }
        if (at(Tok::At)) {
            next();
            Role r = ident("role name");
            expect(Tok::Assign, "'='");
            return make_assign(name, std::move(r), expr(), t.pos);
        }
        fail(peek().pos, "expected ':' or '@' after '" + name + "', found " + describe(peek()));
    }

    PropertySet prop_block()
    {
        expect(Tok::LBrace, "'{'");
        PropertySet props;
        while (!at(Tok::RBrace)) {
            const Token ns = peek();
            if (ident("property namespace") != "N") fail(ns.pos, "scope properties must use the 'N.' namespace");
            expect(Tok::Dot, "'.'");
            std::string key = ident("property name");
            expect(Tok::Assign, "'='");
            const Token lit = next();
            Value v;
            if (lit.kind == Tok::String) v = Value(lit.text);
            else if (lit.kind == Tok::Int) v = Value(parse_int(lit));
            else if (lit.kind == Tok::Ident && (lit.text == "true" || lit.text == "false")) v = Value(lit.text == "true");
            else fail(lit.pos, "property values must be literals, found " + describe(lit));
            if (!props.emplace(key, v).second) fail(ns.pos, "duplicate scope property 'N." + key + "'");
            if (at(Tok::Comma) || at(Tok::Semi)) next();
        }
        expect(Tok::RBrace, "'}'");
        return props;
    }

    static std::int64_t parse_int(const Token& t)
    {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc()) fail(t.pos, "integer literal out of range: " + t.text);
        return v;
    }

    ExprPtr paren_expr()
    {
        expect(Tok::LParen, "'('");
        ExprPtr e = expr();
        expect(Tok::RParen, "')'");
        return e;
    }

    ExprPtr expr() { return or_expr(); }

    ExprPtr or_expr()
    {
        ExprPtr l = and_expr();
        while (is_kw("or")) {
            const SourcePos pos = next().pos;
            l = make_binary(BinaryOp::Or, l, and_expr(), pos);
        }
        return l;
    }

    ExprPtr and_expr()
    {
        ExprPtr l = cmp_expr();
        while (is_kw("and")) {
            const SourcePos pos = next().pos;
            l = make_binary(BinaryOp::And, l, cmp_expr(), pos);
        }
        return l;
    }

    ExprPtr cmp_expr()
    {
        ExprPtr l = add_expr();
        while (true) {
            BinaryOp op;
            switch (peek().kind) {
            case Tok::Eq: op = BinaryOp::Eq; break;
            case Tok::Ne: op = BinaryOp::Ne; break;
            case Tok::Lt: op = BinaryOp::Lt; break;
            case Tok::Gt: op = BinaryOp::Gt; break;
            case Tok::Le: op = BinaryOp::Le; break;
            case Tok::Ge: op = BinaryOp::Ge; break;
            default: return l;
            }
            const SourcePos pos = next().pos;
            l = make_binary(op, l, add_expr(), pos);
        }
    }

    ExprPtr add_expr()
    {
        ExprPtr l = mul_expr();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            const Token t = next();
            l = make_binary(t.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub, l, mul_expr(), t.pos);
        }
        return l;
    }

    ExprPtr mul_expr()
    {
        ExprPtr l = unary_expr();
        while (at(Tok::Star) || at(Tok::Slash)) {
            const Token t = next();
            l = make_binary(t.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div, l, unary_expr(), t.pos);
        }
        return l;
    }

    ExprPtr unary_expr()
    {
        if (at(Tok::Bang)) {
            const SourcePos pos = next().pos;
            return make_not(unary_expr(), pos);
        }
        return primary();
    }

    ExprPtr primary()
    {
        const Token t = peek();
        switch (t.kind) {
        case Tok::Int: next(); return make_literal(Value(parse_int(t)), t.pos);
        case Tok::String: next(); return make_literal(Value(t.text), t.pos);
        case Tok::LParen: return paren_expr();
        case Tok::Ident: break;
        default: fail(t.pos, "expected an expression, found " + describe(t));
        }
        if (t.text == "true" || t.text == "false") {
            next();
            return make_literal(Value(t.text == "true"), t.pos);
        }
        const std::string name = ident("an expression");
        if (at(Tok::Dot)) {
            next();
            return make_var(ident("name after '.'"), name, t.pos);
        }
        if (at(Tok::LParen)) {
            next();
            std::vector<ExprPtr> args;
            if (!at(Tok::RParen)) {
                args.push_back(expr());
                while (at(Tok::Comma)) {
                    next();
                    args.push_back(expr());
                }
            }
            expect(Tok::RParen, "')'");
            if (name == "getInput" && args.size() != 1)
                fail(t.pos, "getInput takes exactly one argument, got " + std::to_string(args.size()));
            return make_call(name, std::move(args), t.pos);
        }
        return make_var(name, {}, t.pos);
    }
};

template <class T, class F> ParseResult<T> run(std::string_view text, F&& f)
{
    ParseResult<T> r;
    try {
        Parser p(text);
        r.value = f(p);
        r.diagnostics = std::move(p.warnings);
    } catch (const ParseError& e) {
        r.value.reset();
        r.diagnostics.push_back(e.diag);
    }
    return r;
}

}  // namespace

ParseResult<Program> parse_program(std::string_view text)
{
    return run<Program>(text, [](Parser& p) {
        Program prog = p.program();
        prog.body = assign_ids(prog.body, NodeId{{0}});
        return prog;
    });
}

ParseResult<std::vector<Rule>> parse_rules(std::string_view text)
{
    return run<std::vector<Rule>>(text, [](Parser& p) {
        auto rules = p.rules();
        for (auto& r : rules) r.body = assign_ids(r.body, NodeId{{0}});
        return rules;
    });
}

ParseResult<ExprPtr> parse_expr(std::string_view text)
{
    return run<ExprPtr>(text, [](Parser& p) { return p.full_expr(); });
}

ParseResult<BehaviourPtr> parse_behaviour(std::string_view text, const NodeId& root)
{
    return run<BehaviourPtr>(text, [&](Parser& p) { return assign_ids(p.full_behaviour(), root); });
}

}  // namespace chorad
