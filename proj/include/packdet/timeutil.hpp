#pragma once

#include <cstdint>
#include <string>

namespace packdet {

/// Inclusive timestamp interval, seconds since the Unix epoch (UTC).
struct TimeRange {
    int64_t begin = 0;
    int64_t end = 0;

    bool contains(int64_t t) const { return t >= begin && t <= end; }
};

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDThh:mm:ss[Z]" as UTC.
int64_t parse_iso8601_utc(const std::string& text);

std::string format_iso8601_utc(int64_t seconds);

/// Parses "<begin>..<end>". A date-only end bound is inclusive of the whole
/// day (expands to 23:59:59).
TimeRange parse_time_range(const std::string& text);

} // namespace packdet
