#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fanflow {

// Calendar month in UTC. The ordinal year*12 + (month-1) is total and
// gap-free, so month arithmetic is plain integer arithmetic on ordinals.
struct MonthKey {
    int year = 0;
    int month = 1;  // 1..12

    int64_t ordinal() const { return static_cast<int64_t>(year) * 12 + (month - 1); }
    MonthKey plus(int64_t k) const { return from_ordinal(ordinal() + k); }

    static MonthKey from_ordinal(int64_t ord);
    static std::optional<MonthKey> parse(std::string_view s);  // "YYYY-MM"
    std::string str() const;

    friend auto operator<=>(const MonthKey&, const MonthKey&) = default;
};

// Inclusive month range.
struct MonthWindow {
    MonthKey from;
    MonthKey to;

    bool valid() const { return from <= to; }
    bool contains(MonthKey m) const { return from <= m && m <= to; }
    int64_t n_months() const { return to.ordinal() - from.ordinal() + 1; }
};

// Proleptic Gregorian calendar <-> days since 1970-01-01 (UTC).
int64_t days_from_civil(int y, int m, int d);
void civil_from_days(int64_t days, int& y, int& m, int& d);

MonthKey month_of_epoch(int64_t epoch_seconds);
int64_t month_start_epoch(MonthKey m);

// Accepts "YYYY-MM-DD[T ]HH:MM:SS[.frac][Z]" (UTC) or integer epoch seconds.
// Fractional seconds are truncated; non-UTC offsets are rejected.
std::optional<int64_t> parse_timestamp(std::string_view s);
std::string format_timestamp(int64_t epoch_seconds);  // 2023-01-05T10:00:00Z

}  // namespace fanflow
