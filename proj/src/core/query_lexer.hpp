#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "flightrag/error.hpp"
#include "text_util.hpp"

namespace flightrag::detail {

enum class TokKind { ident, number, string, symbol, end };

struct Token {
    TokKind kind = TokKind::end;
    std::string text;  // identifiers keep their case; strings are unescaped
    std::size_t pos = 0;
    bool quoted_ident = false;
};

[[noreturn]] inline void parse_fail(std::size_t pos, const std::string& msg) {
    fail(Errc::parse_error, "position " + std::to_string(pos) + ": " + msg);
}

// Shared tokenizer for the SQL and graph query subsets. With dquote_ident,
// "x" is a quoted identifier (SQL); otherwise a string literal (Cypher).
inline std::vector<Token> lex_query(std::string_view s, bool dquote_ident) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {  // line comment
            while (i < s.size() && s[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
            const auto close = s.find("*/", i + 2);
            if (close == std::string_view::npos) parse_fail(start, "unterminated comment");
            i = close + 2;
            continue;
        }
        if (is_alpha(c) || c == '_') {
            while (i < s.size() && (is_alnum(s[i]) || s[i] == '_')) ++i;
            out.push_back({TokKind::ident, std::string(s.substr(start, i - start)), start});
            continue;
        }
        if (is_digit(c)) {
            while (i < s.size() && is_digit(s[i])) ++i;
            out.push_back({TokKind::number, std::string(s.substr(start, i - start)), start});
            continue;
        }
        if (c == '\'' || c == '"' || c == '`') {
            const char q = c;
            std::string text;
            ++i;
            bool closed = false;
            while (i < s.size()) {
                if (s[i] == '\\' && q != '`' && i + 1 < s.size()) {
                    text += s[i + 1];
                    i += 2;
                    continue;
                }
                if (s[i] == q) {
                    if (i + 1 < s.size() && s[i + 1] == q) {
                        text += q;
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                text += s[i++];
            }
            if (!closed) parse_fail(start, "unterminated quoted text");
            const bool ident = q == '`' || (q == '"' && dquote_ident);
            Token t{ident ? TokKind::ident : TokKind::string, std::move(text), start};
            t.quoted_ident = ident;
            out.push_back(std::move(t));
            continue;
        }
        static constexpr std::string_view two[] = {"<=", ">=", "<>", "!=", "->", "<-"};
        bool matched = false;
        for (auto op : two) {
            if (s.substr(i, 2) == op) {
                out.push_back({TokKind::symbol, std::string(op), start});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("=<>(),.;*:[]{}-+").find(c) != std::string_view::npos) {
            out.push_back({TokKind::symbol, std::string(1, c), start});
            ++i;
            continue;
        }
        parse_fail(start, std::string("unexpected character '") + c + "'");
    }
    out.push_back({TokKind::end, "", s.size()});
    return out;
}

// Cursor over a token vector with keyword helpers.
class TokenCursor {
public:
    explicit TokenCursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool at_end() const { return peek().kind == TokKind::end; }

    bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == TokKind::ident && !t.quoted_ident && iequals(t.text, kw);
    }
    bool accept_kw(std::string_view kw) {
        if (!is_kw(kw)) return false;
        next();
        return true;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) parse_fail(peek().pos, "expected " + std::string(kw) + describe());
    }
    bool is_sym(std::string_view s, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == TokKind::symbol && t.text == s;
    }
    bool accept_sym(std::string_view s) {
        if (!is_sym(s)) return false;
        next();
        return true;
    }
    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) parse_fail(peek().pos, "expected '" + std::string(s) + "'" + describe());
    }
    std::string describe() const {
        const Token& t = peek();
        if (t.kind == TokKind::end) return ", found end of query";
        return ", found '" + t.text + "'";
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace flightrag::detail
