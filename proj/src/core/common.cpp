#include <charconv>
#include <cstdio>

#include "flightrag/error.hpp"
#include "flightrag/timestamp.hpp"
#include "flightrag/value.hpp"
#include "text_util.hpp"

namespace flightrag {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::io: return "IoError";
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::missing_column: return "MissingColumn";
        case Errc::duplicate_uid: return "DuplicateUid";
        case Errc::malformed_timestamp: return "MalformedTimestamp";
        case Errc::pattern_violation: return "PatternViolation";
        case Errc::unknown_field: return "UnknownField";
        case Errc::empty_store: return "EmptyStore";
        case Errc::no_connecting_flights: return "NoConnectingFlights";
        case Errc::basis_unavailable: return "BasisUnavailable";
        case Errc::empty_candidates: return "EmptyCandidates";
        case Errc::missing_variable: return "MissingVariable";
        case Errc::llm_unavailable: return "LlmUnavailable";
        case Errc::http_error: return "HttpError";
        case Errc::timeout: return "Timeout";
        case Errc::no_fixture_match: return "NoFixtureMatch";
        case Errc::unparseable_after_retry: return "UnparseableAfterRetry";
        case Errc::parse_error: return "ParseError";
        case Errc::unknown_column: return "UnknownColumn";
        case Errc::unknown_table: return "UnknownTable";
        case Errc::forbidden_statement: return "ForbiddenStatement";
        case Errc::multiple_statements: return "MultipleStatements";
        case Errc::unknown_label: return "UnknownLabel";
        case Errc::unknown_rel_type: return "UnknownRelType";
        case Errc::unknown_property: return "UnknownProperty";
        case Errc::dangling_connection: return "DanglingConnection";
        case Errc::unknown_flight: return "UnknownFlight";
        case Errc::missing_grounding: return "MissingGrounding";
        case Errc::internal: return "InternalError";
    }
    return "Error";
}

std::string Timestamp::to_string() const {
    using namespace std::chrono;
    const auto day = floor<days>(t_);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t_ - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d+0000",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

namespace {

bool read_fixed(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    for (std::size_t i = 0; i < width; ++i)
        if (!detail::is_digit(s[pos + i])) return false;
    std::from_chars(s.data() + pos, s.data() + pos + width, out);
    pos += width;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

}  // namespace

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
    using namespace std::chrono;
    const std::string_view s = detail::trim(text);
    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!read_fixed(s, pos, 4, y) || !expect(s, pos, '-') || !read_fixed(s, pos, 2, mo) ||
        !expect(s, pos, '-') || !read_fixed(s, pos, 2, d))
        return std::nullopt;
    if (!(expect(s, pos, ' ') || expect(s, pos, 'T'))) return std::nullopt;
    if (!read_fixed(s, pos, 2, h) || !expect(s, pos, ':') || !read_fixed(s, pos, 2, mi))
        return std::nullopt;
    if (expect(s, pos, ':') && !read_fixed(s, pos, 2, sec)) return std::nullopt;
    if (expect(s, pos, '.')) {
        while (pos < s.size() && detail::is_digit(s[pos])) ++pos;
    }
    if (pos < s.size() && s[pos] == ' ') ++pos;

    std::int64_t offset_seconds = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' || s[pos] == 'z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            const int sign = s[pos] == '-' ? -1 : 1;
            ++pos;
            int oh = 0, om = 0;
            if (!read_fixed(s, pos, 2, oh)) return std::nullopt;
            expect(s, pos, ':');
            if (!read_fixed(s, pos, 2, om)) return std::nullopt;
            offset_seconds = sign * (oh * 3600 + om * 60);
        }
    }
    if (pos != s.size()) return std::nullopt;

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    const sys_seconds tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
    return Timestamp(tp - seconds{offset_seconds});
}

std::string Value::to_string() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return {};
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else {
                return v.to_string();
            }
        },
        v_);
}

}  // namespace flightrag

#include "flightrag/category.hpp"

namespace flightrag {

std::string_view category_name(QuestionCategory c) {
    switch (c) {
        case QuestionCategory::straightforward: return "STRAIGHTFORWARD";
        case QuestionCategory::taq: return "TAQ";
        case QuestionCategory::bgq: return "BGQ";
        case QuestionCategory::nfq: return "NFQ";
        case QuestionCategory::twaq: return "TWAQ";
        case QuestionCategory::bqa: return "BQA";
        case QuestionCategory::afq: return "AFQ";
    }
    return "STRAIGHTFORWARD";
}

std::optional<QuestionCategory> parse_category(std::string_view name) {
    for (int i = 0; i <= 6; ++i) {
        const auto c = static_cast<QuestionCategory>(i);
        if (detail::iequals(name, category_name(c))) return c;
    }
    return std::nullopt;
}

}  // namespace flightrag
