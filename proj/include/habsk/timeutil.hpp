#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace habsk {

/// UTC seconds since the Unix epoch.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerHour = 3600;

UnixSeconds make_utc(int year, unsigned month, unsigned day, unsigned hour = 0, unsigned minute = 0,
                     unsigned second = 0);

/// Accepts "YYYYMMDDHH" or ISO-8601 "YYYY-MM-DDTHH:MM:SSZ" (the trailing Z
/// and seconds are optional). Throws ParseError otherwise.
UnixSeconds parse_utc(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc(UnixSeconds t);

}  // namespace habsk
