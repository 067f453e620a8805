#pragma once

#include <cstdint>
#include <compare>
#include <optional>
#include <string>

namespace airgam {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
/// All arithmetic is civil; there is no timezone or DST logic here.
struct Date {
    std::int32_t days = 0;

    static Date from_ymd(int year, int month, int day);
    void to_ymd(int& year, int& month, int& day) const;

    int year() const;
    int month() const;        // 1..12
    int day() const;          // 1..31
    int weekday_mon0() const; // Monday = 0 .. Sunday = 6
    int day_of_year() const;  // 1..366

    Date add_days(int n) const { return Date{days + n}; }
    /// Shifts by whole months, clamping the day to the target month's length
    /// (Jan 31 + 1 month = Feb 28/29).
    Date add_months(int n) const;

    auto operator<=>(const Date&) const = default;

    std::string to_string() const; // YYYY-MM-DD
};

/// Inclusive date range.
struct DateRange {
    Date start;
    Date end;

    bool contains(Date d) const { return start <= d && d <= end; }
    int n_days() const { return end.days - start.days + 1; }
    std::string to_string() const;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);

/// Parses YYYY-MM-DD. Returns nullopt on malformed input.
std::optional<Date> parse_date(const std::string& text);

/// UTC instant with second resolution.
using EpochSeconds = std::int64_t;

/// Parses an ISO-8601 timestamp: YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM|+HHMM|-HHMM].
/// A missing offset designator means UTC. Returns nullopt on malformed input.
std::optional<EpochSeconds> parse_iso8601(const std::string& text);

/// Civil date of an instant under a fixed UTC offset.
Date local_date_of(EpochSeconds t, int utc_offset_minutes);
/// Hour of day 0..23 of an instant under a fixed UTC offset.
int local_hour_of(EpochSeconds t, int utc_offset_minutes);

} // namespace airgam
