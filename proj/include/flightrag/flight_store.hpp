#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flightrag/timestamp.hpp"
#include "flightrag/value.hpp"

namespace flightrag {

enum class BusService { remote, none };
enum class Direction { departure, arrival };
enum class SafeTownAirport { J, P };

struct FlightRecord {
    std::string flight_nr;
    std::string flight_uid;
    std::string aircraft_category;
    std::string bus_gate;
    BusService bus_service = BusService::none;
    Direction direction = Direction::departure;
    std::string ramp;
    std::string pier;
    std::string main_ground_handler;
    Timestamp expected_on_ramp;
    Timestamp expected_off_ramp;
    std::string connecting_flight_nr;
    std::string connecting_flight_uid;
    Timestamp modified_at;
    std::string previous_ramp;
    std::string aircraft_registration;
    std::string flight_state;
    std::int64_t mtt_minutes = 0;
    std::int64_t mtt_single_leg_minutes = 0;
    bool eu_indicator = false;
    SafeTownAirport safe_town_airport = SafeTownAirport::J;
    Timestamp scheduled_block;
    Timestamp best_block;
    Timestamp expected_block;
    std::optional<Timestamp> expected_tow_in;
    std::optional<Timestamp> expected_tow_off;
    std::optional<Timestamp> actual_final_approach;
    std::optional<Timestamp> actual_block;
    std::optional<Timestamp> actual_take_off;
    std::optional<Timestamp> actual_boarding;
    std::optional<Timestamp> actual_tow_in_request;
    std::optional<Timestamp> actual_tow_off;
    std::optional<Timestamp> actual_on_ramp;
    std::optional<Timestamp> actual_off_ramp;
    std::string flight_nature;
    bool push_back = false;
    std::string airline_name;

    friend bool operator==(const FlightRecord&, const FlightRecord&) = default;
};

enum class FieldKind { text, code, enumeration, integer, boolean, timestamp };

struct FieldInfo {
    std::string_view name;   // canonical CSV column / SQL column / graph property
    std::string_view label;  // article clause label
    FieldKind kind;
    bool optional;           // empty value allowed
};

// Every FlightRecord field in canonical order (CSV columns, article clauses).
std::span<const FieldInfo> flight_fields();
std::optional<std::size_t> field_index(std::string_view name);
const FieldInfo& field_info(std::size_t index);

// Typed read of one field; empty optional fields read as null.
Value field_value(const FlightRecord& record, std::size_t index);
// Canonical text of one field (empty for null).
std::string field_text(const FlightRecord& record, std::size_t index);

std::string to_string(BusService v);
std::string to_string(Direction v);
std::string to_string(SafeTownAirport v);

// Immutable, validated collection of flight rows.
class FlightStore {
public:
    FlightStore() = default;

    // Validates every invariant; throws Error on the first violation.
    static FlightStore from_records(std::vector<FlightRecord> records);

    std::span<const FlightRecord> records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const FlightRecord* find_uid(std::string_view uid) const;
    // First record (in store order) carrying the flight number, case-insensitive.
    const FlightRecord* find_flight_nr(std::string_view flight_nr) const;

private:
    std::vector<FlightRecord> records_;
    std::unordered_map<std::string, std::size_t> by_uid_;
    std::unordered_map<std::string, std::size_t> by_flight_nr_;
};

struct Article {
    std::string doc_id;
    std::string text;
    std::string source_uid;

    friend bool operator==(const Article&, const Article&) = default;
};

FlightStore ingest_csv(const std::filesystem::path& path);
FlightStore parse_csv(std::istream& in);
void write_csv(const FlightStore& store, std::ostream& out);

std::string render_article_text(const FlightRecord& record);
std::vector<Article> render_articles(const FlightStore& store);

// Exact match on one field. Code fields compare case-insensitively and
// timestamp fields compare as instants. Throws Errc::unknown_field.
std::vector<FlightRecord> lookup(const FlightStore& store, std::string_view field,
                                 std::string_view value);

bool is_valid_flight_nr(std::string_view s);
bool is_valid_gate_code(std::string_view s);

}  // namespace flightrag
