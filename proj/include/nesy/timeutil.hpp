#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nesy {

// ISO-8601 timestamp handling on UTC milliseconds since the Unix epoch.
// Accepted forms: "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM:SS", optional
// fractional seconds, optional "Z" or "+HH:MM"/"-HH:MM" offset.
std::optional<std::int64_t> parse_iso8601_ms(const std::string& text);

std::string format_iso8601_ms(std::int64_t ms);

inline double ms_to_hours(std::int64_t ms) { return static_cast<double>(ms) / 3.6e6; }

}  // namespace nesy
