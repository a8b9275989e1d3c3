#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mcao {

// Nanoseconds. Simulation clocks start at 0; wall timestamps count from the Unix epoch.
using TimeNs = std::int64_t;

constexpr TimeNs kNsPerSecond = 1'000'000'000;

constexpr TimeNs seconds_to_ns(double s) { return static_cast<TimeNs>(s * 1e9 + (s >= 0 ? 0.5 : -0.5)); }
constexpr double ns_to_seconds(TimeNs t) { return static_cast<double>(t) * 1e-9; }

// Accepts ISO-8601 UTC ("2026-10-15T08:00:00.25Z", offset suffix allowed) or a plain
// decimal number of seconds. Throws ParseError.
TimeNs parse_timestamp(std::string_view text);

std::string format_iso8601(TimeNs t);

}  // namespace mcao
