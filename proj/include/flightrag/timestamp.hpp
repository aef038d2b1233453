#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flightrag {

// UTC instant with one-second resolution.
class Timestamp {
public:
    using clock_seconds = std::chrono::sys_seconds;

    constexpr Timestamp() = default;
    constexpr explicit Timestamp(clock_seconds t) : t_(t) {}

    static constexpr Timestamp from_epoch(std::int64_t seconds) {
        return Timestamp(clock_seconds(std::chrono::seconds(seconds)));
    }

    constexpr std::int64_t epoch_seconds() const { return t_.time_since_epoch().count(); }
    constexpr clock_seconds time_point() const { return t_; }

    constexpr Timestamp plus_seconds(std::int64_t s) const {
        return Timestamp(t_ + std::chrono::seconds(s));
    }
    constexpr Timestamp plus_minutes(std::int64_t m) const { return plus_seconds(m * 60); }

    // Canonical form: "YYYY-MM-DD HH:MM:SS+0000".
    std::string to_string() const;

    // Accepts the canonical form plus common variants: 'T' separator, missing
    // seconds, and "Z" / "+00:00" / "+0000" / no suffix. Non-UTC offsets are
    // applied. Returns nullopt on anything else.
    static std::optional<Timestamp> parse(std::string_view text);

    friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    clock_seconds t_{};
};

}  // namespace flightrag
