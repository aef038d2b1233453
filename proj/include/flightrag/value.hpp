#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "flightrag/timestamp.hpp"

namespace flightrag {

// A cell value shared by the flight table, the SQL executor and the graph.
class Value {
public:
    using Storage = std::variant<std::monostate, bool, std::int64_t, std::string, Timestamp>;

    Value() = default;
    Value(bool b) : v_(b) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(Timestamp t) : v_(t) {}

    bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_timestamp() const { return std::holds_alternative<Timestamp>(v_); }

    bool as_bool() const { return std::get<bool>(v_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
    const std::string& as_string() const { return std::get<std::string>(v_); }
    Timestamp as_timestamp() const { return std::get<Timestamp>(v_); }

    const Storage& storage() const { return v_; }

    // Canonical text; null renders as the empty string.
    std::string to_string() const;

    friend bool operator==(const Value&, const Value&) = default;

private:
    Storage v_;
};

}  // namespace flightrag
