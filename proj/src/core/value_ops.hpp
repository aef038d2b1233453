#pragma once

#include <charconv>
#include <optional>
#include <string>

#include "flightrag/value.hpp"
#include "text_util.hpp"

namespace flightrag::detail {

inline int cmp3(auto a, auto b) { return a < b ? -1 : (b < a ? 1 : 0); }

inline std::optional<std::int64_t> parse_i64(std::string_view s) {
    s = trim(s);
    std::int64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Three-way comparison used by both query executors. nullopt when either side
// is null. Strings compare case-insensitively when `fold_case`; a string
// against a timestamp or integer is converted when it parses.
inline std::optional<int> compare_values(const Value& a, const Value& b, bool fold_case) {
    if (a.is_null() || b.is_null()) return std::nullopt;
    if (a.is_timestamp() && b.is_timestamp()) return cmp3(a.as_timestamp(), b.as_timestamp());
    if (a.is_int() && b.is_int()) return cmp3(a.as_int(), b.as_int());
    if (a.is_bool() && b.is_bool()) return cmp3(a.as_bool(), b.as_bool());
    if (a.is_timestamp() && b.is_string()) {
        if (auto t = Timestamp::parse(b.as_string())) return cmp3(a.as_timestamp(), *t);
    }
    if (a.is_string() && b.is_timestamp()) {
        if (auto t = Timestamp::parse(a.as_string())) return cmp3(*t, b.as_timestamp());
    }
    if (a.is_bool() && b.is_int()) return cmp3(static_cast<std::int64_t>(a.as_bool()), b.as_int());
    if (a.is_int() && b.is_bool()) return cmp3(a.as_int(), static_cast<std::int64_t>(b.as_bool()));
    if (a.is_int() && b.is_string()) {
        if (auto v = parse_i64(b.as_string())) return cmp3(a.as_int(), *v);
    }
    if (a.is_string() && b.is_int()) {
        if (auto v = parse_i64(a.as_string())) return cmp3(*v, b.as_int());
    }
    std::string x = a.to_string(), y = b.to_string();
    if (fold_case) {
        x = to_lower(x);
        y = to_lower(y);
    }
    return x.compare(y) < 0 ? -1 : (x == y ? 0 : 1);
}

// Total order for sorting: nulls first, then compare_values.
inline int sort_compare(const Value& a, const Value& b, bool fold_case) {
    if (a.is_null() || b.is_null()) return cmp3(!a.is_null(), !b.is_null());
    return *compare_values(a, b, fold_case);
}

// Strips a Markdown code fence and a leading language tag.
inline std::string strip_code_fences(std::string_view text) {
    std::string_view s = trim(text);
    const auto open = s.find("```");
    if (open != std::string_view::npos) {
        s.remove_prefix(open + 3);
        const auto eol = s.find('\n');
        const auto first_line = trim(s.substr(0, eol));
        bool tag = false;
        for (std::string_view known : {"sql", "sqlite", "cypher", "neo4j", "text"})
            if (iequals(first_line, known)) tag = true;
        if (tag && eol != std::string_view::npos) s.remove_prefix(eol + 1);
        const auto close = s.find("```");
        if (close != std::string_view::npos) s = s.substr(0, close);
    }
    return std::string(trim(s));
}

}  // namespace flightrag::detail
