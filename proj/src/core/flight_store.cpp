#include "flightrag/flight_store.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "flightrag/error.hpp"
#include "text_util.hpp"

namespace flightrag {

namespace {

using Getter = Value (*)(const FlightRecord&);
// Setter returns false when the text is not a valid value for the field.
using Setter = bool (*)(FlightRecord&, std::string_view);

struct FieldAccess {
    FieldInfo info;
    Getter get;
    Setter set;
};

bool parse_ts(std::string_view s, Timestamp& out) {
    auto t = Timestamp::parse(s);
    if (!t) return false;
    out = *t;
    return true;
}

bool parse_opt_ts(std::string_view s, std::optional<Timestamp>& out) {
    if (detail::trim(s).empty()) {
        out.reset();
        return true;
    }
    auto t = Timestamp::parse(s);
    if (!t) return false;
    out = *t;
    return true;
}

bool parse_int(std::string_view s, std::int64_t& out) {
    s = detail::trim(s);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && out >= 0;
}

bool parse_bool(std::string_view s, bool& out) {
    s = detail::trim(s);
    if (detail::iequals(s, "true")) {
        out = true;
        return true;
    }
    if (detail::iequals(s, "false")) {
        out = false;
        return true;
    }
    return false;
}

Value opt_ts(const std::optional<Timestamp>& t) { return t ? Value(*t) : Value(); }
Value opt_str(const std::string& s) { return s.empty() ? Value() : Value(s); }

#define FR_TEXT(field, label, kind, optional)                                              \
    FieldAccess {                                                                          \
        FieldInfo{#field, label, FieldKind::kind, optional},                               \
            [](const FlightRecord& r) { return opt_str(r.field); },                        \
            [](FlightRecord& r, std::string_view s) {                                      \
                r.field = std::string(s);                                                  \
                return true;                                                               \
            }                                                                              \
    }

#define FR_TS(field, label)                                                                \
    FieldAccess {                                                                          \
        FieldInfo{#field, label, FieldKind::timestamp, false},                             \
            [](const FlightRecord& r) { return Value(r.field); },                          \
            [](FlightRecord& r, std::string_view s) { return parse_ts(s, r.field); }       \
    }

#define FR_OPT_TS(field, label)                                                            \
    FieldAccess {                                                                          \
        FieldInfo{#field, label, FieldKind::timestamp, true},                              \
            [](const FlightRecord& r) { return opt_ts(r.field); },                         \
            [](FlightRecord& r, std::string_view s) { return parse_opt_ts(s, r.field); }   \
    }

#define FR_INT(field, label)                                                               \
    FieldAccess {                                                                          \
        FieldInfo{#field, label, FieldKind::integer, false},                               \
            [](const FlightRecord& r) { return Value(r.field); },                          \
            [](FlightRecord& r, std::string_view s) { return parse_int(s, r.field); }      \
    }

#define FR_BOOL(field, label)                                                              \
    FieldAccess {                                                                          \
        FieldInfo{#field, label, FieldKind::boolean, false},                               \
            [](const FlightRecord& r) { return Value(r.field); },                          \
            [](FlightRecord& r, std::string_view s) { return parse_bool(s, r.field); }     \
    }

const std::array<FieldAccess, 37>& field_table() {
    static const std::array<FieldAccess, 37> table = {
        FR_TEXT(flight_nr, "flight number", code, false),
        FR_TEXT(flight_uid, "flight uid", code, false),
        FR_TEXT(aircraft_category, "aircraft category", code, false),
        FR_TEXT(bus_gate, "bus gate", code, true),
        FieldAccess{FieldInfo{"bus_service", "bus service needed", FieldKind::enumeration, false},
                    [](const FlightRecord& r) { return Value(to_string(r.bus_service)); },
                    [](FlightRecord& r, std::string_view s) {
                        s = detail::trim(s);
                        if (detail::iequals(s, "remote")) r.bus_service = BusService::remote;
                        else if (detail::iequals(s, "none")) r.bus_service = BusService::none;
                        else return false;
                        return true;
                    }},
        FieldAccess{FieldInfo{"direction", "direction", FieldKind::enumeration, false},
                    [](const FlightRecord& r) { return Value(to_string(r.direction)); },
                    [](FlightRecord& r, std::string_view s) {
                        s = detail::trim(s);
                        if (detail::iequals(s, "departure")) r.direction = Direction::departure;
                        else if (detail::iequals(s, "arrival")) r.direction = Direction::arrival;
                        else return false;
                        return true;
                    }},
        FR_TEXT(ramp, "ramp", code, true),
        FR_TEXT(pier, "pier", code, true),
        FR_TEXT(main_ground_handler, "main ground handler", text, false),
        FR_TS(expected_on_ramp, "expected on-ramp time"),
        FR_TS(expected_off_ramp, "expected off-ramp time"),
        FR_TEXT(connecting_flight_nr, "connecting flight number", code, true),
        FR_TEXT(connecting_flight_uid, "connecting flight uid", code, true),
        FR_TS(modified_at, "modified date and time"),
        FR_TEXT(previous_ramp, "previous ramp", code, true),
        FR_TEXT(aircraft_registration, "aircraft registration", code, false),
        FR_TEXT(flight_state, "flight state", text, false),
        FR_INT(mtt_minutes, "minimum transfer time in minutes"),
        FR_INT(mtt_single_leg_minutes, "minimum transfer time single leg in minutes"),
        FR_BOOL(eu_indicator, "eu indicator"),
        FieldAccess{FieldInfo{"safe_town_airport", "safe town airport", FieldKind::enumeration,
                              false},
                    [](const FlightRecord& r) { return Value(to_string(r.safe_town_airport)); },
                    [](FlightRecord& r, std::string_view s) {
                        s = detail::trim(s);
                        if (s == "J") r.safe_town_airport = SafeTownAirport::J;
                        else if (s == "P") r.safe_town_airport = SafeTownAirport::P;
                        else return false;
                        return true;
                    }},
        FR_TS(scheduled_block, "scheduled block time"),
        FR_TS(best_block, "best block time"),
        FR_TS(expected_block, "expected block time"),
        FR_OPT_TS(expected_tow_in, "expected tow-in time"),
        FR_OPT_TS(expected_tow_off, "expected tow-off time"),
        FR_OPT_TS(actual_final_approach, "actual final approach time"),
        FR_OPT_TS(actual_block, "actual block time"),
        FR_OPT_TS(actual_take_off, "actual take-off time"),
        FR_OPT_TS(actual_boarding, "actual boarding time"),
        FR_OPT_TS(actual_tow_in_request, "actual tow-in request time"),
        FR_OPT_TS(actual_tow_off, "actual tow-off time"),
        FR_OPT_TS(actual_on_ramp, "actual on-ramp time"),
        FR_OPT_TS(actual_off_ramp, "actual off-ramp time"),
        FR_TEXT(flight_nature, "flight nature", text, false),
        FR_BOOL(push_back, "push back"),
        FR_TEXT(airline_name, "airline", text, false),
    };
    return table;
}

#undef FR_TEXT
#undef FR_TS
#undef FR_OPT_TS
#undef FR_INT
#undef FR_BOOL

const std::array<FieldInfo, 37>& info_table() {
    static const std::array<FieldInfo, 37> infos = [] {
        std::array<FieldInfo, 37> out{};
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = field_table()[i].info;
        return out;
    }();
    return infos;
}

bool gate_like_field(std::string_view name) {
    return name == "ramp" || name == "bus_gate" || name == "previous_ramp";
}

std::string row_field(std::size_t row, std::string_view field) {
    return "row " + std::to_string(row) + ", field " + std::string(field);
}

void validate_record(const FlightRecord& r, std::size_t row) {
    if (!is_valid_flight_nr(r.flight_nr))
        fail(Errc::pattern_violation, row_field(row, "flight_nr") + ": '" + r.flight_nr + "'");
    for (std::size_t i = 0; i < field_table().size(); ++i) {
        const auto& info = field_table()[i].info;
        const std::string text = field_text(r, i);
        if (!info.optional && info.kind != FieldKind::timestamp && text.empty())
            fail(Errc::pattern_violation, row_field(row, info.name) + ": empty value");
        if (gate_like_field(info.name) && !text.empty() && !is_valid_gate_code(text))
            fail(Errc::pattern_violation, row_field(row, info.name) + ": '" + text + "'");
    }
    if (!(r.expected_on_ramp < r.expected_off_ramp))
        fail(Errc::pattern_violation,
             row_field(row, "expected_off_ramp") + ": not after expected_on_ramp");
}

}  // namespace

std::span<const FieldInfo> flight_fields() { return info_table(); }

std::optional<std::size_t> field_index(std::string_view name) {
    const auto& infos = info_table();
    for (std::size_t i = 0; i < infos.size(); ++i)
        if (infos[i].name == name) return i;
    return std::nullopt;
}

const FieldInfo& field_info(std::size_t index) { return info_table().at(index); }

Value field_value(const FlightRecord& record, std::size_t index) {
    return field_table().at(index).get(record);
}

std::string field_text(const FlightRecord& record, std::size_t index) {
    return field_value(record, index).to_string();
}

std::string to_string(BusService v) { return v == BusService::remote ? "remote" : "none"; }
std::string to_string(Direction v) { return v == Direction::departure ? "departure" : "arrival"; }
std::string to_string(SafeTownAirport v) { return v == SafeTownAirport::J ? "J" : "P"; }

bool is_valid_flight_nr(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && s[i] >= 'A' && s[i] <= 'Z') ++i;
    if (i < 1 || i > 3) return false;
    const std::size_t digits = s.size() - i;
    if (digits < 1 || digits > 4) return false;
    for (; i < s.size(); ++i)
        if (!detail::is_digit(s[i])) return false;
    return true;
}

bool is_valid_gate_code(std::string_view s) {
    return s.size() == 3 && s[0] >= 'A' && s[0] <= 'Z' && detail::is_digit(s[1]) &&
           detail::is_digit(s[2]);
}

FlightStore FlightStore::from_records(std::vector<FlightRecord> records) {
    FlightStore store;
    store.records_ = std::move(records);
    store.by_uid_.reserve(store.records_.size());
    for (std::size_t i = 0; i < store.records_.size(); ++i) {
        const auto& r = store.records_[i];
        validate_record(r, i + 1);
        auto [it, inserted] = store.by_uid_.emplace(r.flight_uid, i);
        if (!inserted)
            fail(Errc::duplicate_uid, r.flight_uid + " (rows " + std::to_string(it->second + 1) +
                                          " and " + std::to_string(i + 1) + ")");
        store.by_flight_nr_.emplace(detail::to_upper(r.flight_nr), i);
    }
    return store;
}

const FlightRecord* FlightStore::find_uid(std::string_view uid) const {
    auto it = by_uid_.find(std::string(uid));
    return it == by_uid_.end() ? nullptr : &records_[it->second];
}

const FlightRecord* FlightStore::find_flight_nr(std::string_view flight_nr) const {
    auto it = by_flight_nr_.find(detail::to_upper(flight_nr));
    return it == by_flight_nr_.end() ? nullptr : &records_[it->second];
}

FlightStore parse_csv(std::istream& in) {
    detail::CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) fail(Errc::missing_column, std::string(field_table()[0].info.name));

    std::vector<std::size_t> column_of(field_table().size());
    for (std::size_t f = 0; f < field_table().size(); ++f) {
        const auto name = field_table()[f].info.name;
        auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
            return detail::trim(h) == name;
        });
        if (it == header.end()) fail(Errc::missing_column, std::string(name));
        column_of[f] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<FlightRecord> records;
    std::vector<std::string> cells;
    std::size_t row = 0;
    while (reader.next(cells)) {
        ++row;
        if (cells.size() == 1 && detail::trim(cells[0]).empty()) continue;  // blank line
        FlightRecord r;
        for (std::size_t f = 0; f < field_table().size(); ++f) {
            const auto& access = field_table()[f];
            const std::size_t col = column_of[f];
            const std::string_view cell =
                col < cells.size() ? std::string_view(cells[col]) : std::string_view();
            if (!access.set(r, cell)) {
                const Errc code = access.info.kind == FieldKind::timestamp
                                      ? Errc::malformed_timestamp
                                      : Errc::pattern_violation;
                fail(code, row_field(row, access.info.name) + ": '" + std::string(cell) + "'");
            }
        }
        records.push_back(std::move(r));
    }
    return FlightStore::from_records(std::move(records));
}

FlightStore ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open " + path.string());
    return parse_csv(in);
}

void write_csv(const FlightStore& store, std::ostream& out) {
    std::vector<std::string> cells;
    for (const auto& f : flight_fields()) cells.emplace_back(f.name);
    detail::write_csv_row(out, cells);
    for (const auto& r : store.records()) {
        cells.clear();
        for (std::size_t i = 0; i < field_table().size(); ++i) cells.push_back(field_text(r, i));
        detail::write_csv_row(out, cells);
    }
}

std::string render_article_text(const FlightRecord& record) {
    std::string text;
    for (std::size_t i = 0; i < field_table().size(); ++i) {
        const std::string value = field_text(record, i);
        if (value.empty()) continue;
        if (!text.empty()) text += "; ";
        text += field_table()[i].info.label;
        text += ": ";
        text += value;
    }
    return text;
}

std::vector<Article> render_articles(const FlightStore& store) {
    std::vector<Article> out;
    out.reserve(store.size());
    for (const auto& r : store.records())
        out.push_back(Article{r.flight_uid, render_article_text(r), r.flight_uid});
    return out;
}

std::vector<FlightRecord> lookup(const FlightStore& store, std::string_view field,
                                 std::string_view value) {
    const auto idx = field_index(field);
    if (!idx) fail(Errc::unknown_field, std::string(field));
    const FieldInfo& info = field_info(*idx);

    std::function<bool(const Value&)> matches;
    if (info.kind == FieldKind::timestamp) {
        const auto wanted = Timestamp::parse(value);
        matches = [wanted](const Value& v) {
            return wanted && v.is_timestamp() && v.as_timestamp() == *wanted;
        };
    } else if (info.kind == FieldKind::code || info.kind == FieldKind::enumeration ||
               info.kind == FieldKind::boolean) {
        const std::string wanted(detail::trim(value));
        matches = [wanted](const Value& v) { return detail::iequals(v.to_string(), wanted); };
    } else {
        const std::string wanted(value);
        matches = [wanted](const Value& v) { return v.to_string() == wanted; };
    }

    std::vector<FlightRecord> out;
    for (const auto& r : store.records()) {
        const Value v = field_value(r, *idx);
        if (!v.is_null() && matches(v)) out.push_back(r);
    }
    return out;
}

}  // namespace flightrag
