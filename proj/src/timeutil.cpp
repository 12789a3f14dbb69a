#include "packdet/timeutil.hpp"

#include "packdet/error.hpp"

#include <charconv>
#include <cstdio>

namespace packdet {

namespace {

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
int64_t days_from_civil(int64_t y, int64_t m, int64_t d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int64_t yoe = y - era * 400;
    const int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

void civil_from_days(int64_t z, int64_t& y, int64_t& m, int64_t& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int64_t doe = z - era * 146097;
    const int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = yoe + era * 400;
    const int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int64_t mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

int parse_int(const std::string& s, size_t pos, size_t len) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc() || ptr != s.data() + pos + len) {
        raise(Errc::bad_argument, "invalid timestamp: " + s);
    }
    return v;
}

} // namespace

int64_t parse_iso8601_utc(const std::string& text) {
    // YYYY-MM-DD with optional Thh:mm:ss and optional trailing Z
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
        raise(Errc::bad_argument, "invalid ISO-8601 timestamp: " + text);
    }
    int year = parse_int(text, 0, 4);
    int month = parse_int(text, 5, 2);
    int day = parse_int(text, 8, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31) {
        raise(Errc::bad_argument, "invalid ISO-8601 date: " + text);
    }
    int64_t seconds = days_from_civil(year, month, day) * 86400;
    if (text.size() == 10) return seconds;
    if (text.size() < 19 || text[10] != 'T' || text[13] != ':' || text[16] != ':') {
        raise(Errc::bad_argument, "invalid ISO-8601 timestamp: " + text);
    }
    int hh = parse_int(text, 11, 2);
    int mm = parse_int(text, 14, 2);
    int ss = parse_int(text, 17, 2);
    if (hh > 23 || mm > 59 || ss > 60 || (text.size() > 19 && text.substr(19) != "Z")) {
        raise(Errc::bad_argument, "invalid ISO-8601 timestamp: " + text);
    }
    return seconds + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601_utc(int64_t seconds) {
    int64_t days = seconds / 86400;
    int64_t rem = seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int64_t y, m, d;
    civil_from_days(days, y, m, d);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04lld-%02lld-%02lldT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), static_cast<long long>(m),
                  static_cast<long long>(d), static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

TimeRange parse_time_range(const std::string& text) {
    size_t sep = text.find("..");
    if (sep == std::string::npos) {
        raise(Errc::bad_argument, "time range must look like <begin>..<end>: " + text);
    }
    std::string lo = text.substr(0, sep);
    std::string hi = text.substr(sep + 2);
    TimeRange r;
    r.begin = parse_iso8601_utc(lo);
    r.end = parse_iso8601_utc(hi);
    if (hi.size() == 10) r.end += 86399; // whole final day
    if (r.end < r.begin) raise(Errc::bad_argument, "time range is reversed: " + text);
    return r;
}

} // namespace packdet
