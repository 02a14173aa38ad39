#include "fanflow/month.hpp"

#include <charconv>
#include <cstdio>

namespace fanflow {

MonthKey MonthKey::from_ordinal(int64_t ord) {
    int64_t y = ord >= 0 ? ord / 12 : (ord - 11) / 12;
    int m = static_cast<int>(ord - y * 12) + 1;
    return MonthKey{static_cast<int>(y), m};
}

std::optional<MonthKey> MonthKey::parse(std::string_view s) {
    if (s.size() != 7 || s[4] != '-') return std::nullopt;
    int y = 0, m = 0;
    auto r1 = std::from_chars(s.data(), s.data() + 4, y);
    auto r2 = std::from_chars(s.data() + 5, s.data() + 7, m);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != s.data() + 4 ||
        r2.ptr != s.data() + 7 || m < 1 || m > 12)
        return std::nullopt;
    return MonthKey{y, m};
}

std::string MonthKey::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

// Howard Hinnant's civil-date algorithms.
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t days, int& y, int& m, int& d) {
    days += 719468;
    const int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

MonthKey month_of_epoch(int64_t epoch_seconds) {
    int64_t days = epoch_seconds >= 0 ? epoch_seconds / 86400 : (epoch_seconds - 86399) / 86400;
    int y, m, d;
    civil_from_days(days, y, m, d);
    return MonthKey{y, m};
}

int64_t month_start_epoch(MonthKey m) {
    return days_from_civil(m.year, m.month, 1) * 86400;
}

namespace {

bool parse_fixed_int(std::string_view s, size_t pos, size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return r.ec == std::errc{} && r.ptr == s.data() + pos + len;
}

constexpr int days_in_month_table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    return (m == 2 && is_leap(y)) ? 29 : days_in_month_table[m - 1];
}

}  // namespace

std::optional<int64_t> parse_timestamp(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;

    // Integer epoch seconds.
    bool all_digits = s[0] == '-' ? s.size() > 1 : true;
    for (size_t i = (s[0] == '-' ? 1 : 0); i < s.size() && all_digits; ++i)
        all_digits = s[i] >= '0' && s[i] <= '9';
    if (all_digits) {
        int64_t v = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
        return v;
    }

    // ISO-8601, second resolution, UTC only.
    if (s.size() < 19) return std::nullopt;
    int y, mo, d, h, mi, se;
    if (!parse_fixed_int(s, 0, 4, y) || s[4] != '-' || !parse_fixed_int(s, 5, 2, mo) ||
        s[7] != '-' || !parse_fixed_int(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') ||
        !parse_fixed_int(s, 11, 2, h) || s[13] != ':' || !parse_fixed_int(s, 14, 2, mi) ||
        s[16] != ':' || !parse_fixed_int(s, 17, 2, se))
        return std::nullopt;
    size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        size_t frac = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') { ++pos; ++frac; }
        if (frac == 0) return std::nullopt;
    }
    if (pos < s.size()) {
        std::string_view tail = s.substr(pos);
        if (tail != "Z" && tail != "+00:00" && tail != "+0000") return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 || mi > 59 || se > 60)
        return std::nullopt;
    if (se == 60) se = 59;  // leap second clamp
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

std::string format_timestamp(int64_t epoch_seconds) {
    int64_t days = epoch_seconds >= 0 ? epoch_seconds / 86400 : (epoch_seconds - 86399) / 86400;
    int64_t rem = epoch_seconds - days * 86400;
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

}  // namespace fanflow
