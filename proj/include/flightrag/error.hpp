#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flightrag {

enum class Errc {
    io,
    invalid_argument,
    missing_column,
    duplicate_uid,
    malformed_timestamp,
    pattern_violation,
    unknown_field,
    empty_store,
    no_connecting_flights,
    basis_unavailable,
    empty_candidates,
    missing_variable,
    llm_unavailable,
    http_error,
    timeout,
    no_fixture_match,
    unparseable_after_retry,
    parse_error,
    unknown_column,
    unknown_table,
    forbidden_statement,
    multiple_statements,
    unknown_label,
    unknown_rel_type,
    unknown_property,
    dangling_connection,
    unknown_flight,
    missing_grounding,
    internal,
};

std::string_view errc_name(Errc code) noexcept;

// Single exception type for the library; the code carries the error kind and
// the message carries the offending detail (row, field, uid, position...).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

    // Failures of the model backend, as opposed to failures of our own parsing.
    bool is_llm_failure() const noexcept {
        return code_ == Errc::llm_unavailable || code_ == Errc::http_error ||
               code_ == Errc::timeout || code_ == Errc::no_fixture_match;
    }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace flightrag
