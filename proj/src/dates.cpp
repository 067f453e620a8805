#include "airgam/dates.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>

namespace airgam {

namespace {

// Days-from-civil and civil-from-days after Howard Hinnant's date algorithms.
std::int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);              // [0, 399]
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;   // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;             // [0, 146096]
    return era * 146097 + static_cast<std::int32_t>(doe) - 719468;
}

void civil_from_days(std::int32_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int32_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);           // [0, 146096]
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);           // [0, 365]
    const unsigned mp = (5 * doy + 2) / 153;                                // [0, 11]
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = yr + (m <= 2);
}

bool parse_int(const char* s, int len, int& out) {
    out = 0;
    for (int i = 0; i < len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

} // namespace

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return lengths[month - 1];
}

Date Date::from_ymd(int year, int month, int day) {
    return Date{days_from_civil(year, month, day)};
}

void Date::to_ymd(int& year, int& month, int& day) const {
    civil_from_days(days, year, month, day);
}

int Date::year() const {
    int y, m, d;
    to_ymd(y, m, d);
    return y;
}

int Date::month() const {
    int y, m, d;
    to_ymd(y, m, d);
    return m;
}

int Date::day() const {
    int y, m, d;
    to_ymd(y, m, d);
    return d;
}

int Date::weekday_mon0() const {
    // 1970-01-01 was a Thursday (weekday 3 with Monday = 0).
    std::int32_t w = (days + 3) % 7;
    return w < 0 ? w + 7 : w;
}

int Date::day_of_year() const {
    int y, m, d;
    to_ymd(y, m, d);
    return days - days_from_civil(y, 1, 1) + 1;
}

Date Date::add_months(int n) const {
    int y, m, d;
    to_ymd(y, m, d);
    int total = y * 12 + (m - 1) + n;
    int ny = total / 12;
    int nm = total % 12;
    if (nm < 0) {
        nm += 12;
        ny -= 1;
    }
    nm += 1;
    int nd = d;
    if (nd > days_in_month(ny, nm)) nd = days_in_month(ny, nm);
    return from_ymd(ny, nm, nd);
}

std::string Date::to_string() const {
    int y, m, d;
    to_ymd(y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

std::string DateRange::to_string() const {
    return start.to_string() + ".." + end.to_string();
}

std::optional<Date> parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y, m, d;
    if (!parse_int(text.data(), 4, y) || !parse_int(text.data() + 5, 2, m) ||
        !parse_int(text.data() + 8, 2, d))
        return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return std::nullopt;
    return Date::from_ymd(y, m, d);
}

std::optional<EpochSeconds> parse_iso8601(const std::string& text) {
    // Minimum form: YYYY-MM-DDTHH:MM
    if (text.size() < 16) return std::nullopt;
    auto date = parse_date(text.substr(0, 10));
    if (!date) return std::nullopt;
    char sep = text[10];
    if (sep != 'T' && sep != ' ') return std::nullopt;

    int hh, mm, ss = 0;
    if (text[13] != ':') return std::nullopt;
    if (!parse_int(text.data() + 11, 2, hh) || !parse_int(text.data() + 14, 2, mm))
        return std::nullopt;
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        if (pos + 3 > text.size()) return std::nullopt;
        if (!parse_int(text.data() + pos + 1, 2, ss)) return std::nullopt;
        pos += 3;
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

    std::int64_t t = static_cast<std::int64_t>(date->days) * 86400 + hh * 3600 + mm * 60 + ss;

    if (pos == text.size()) return t; // no designator: treat as UTC
    char c = text[pos];
    if (c == 'Z' && pos + 1 == text.size()) return t;
    if (c != '+' && c != '-') return std::nullopt;
    int oh, om = 0;
    std::size_t rest = text.size() - pos - 1;
    if (rest == 5 && text[pos + 3] == ':') {
        if (!parse_int(text.data() + pos + 1, 2, oh) || !parse_int(text.data() + pos + 4, 2, om))
            return std::nullopt;
    } else if (rest == 4) {
        if (!parse_int(text.data() + pos + 1, 2, oh) || !parse_int(text.data() + pos + 3, 2, om))
            return std::nullopt;
    } else if (rest == 2) {
        if (!parse_int(text.data() + pos + 1, 2, oh)) return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (oh > 23 || om > 59) return std::nullopt;
    std::int64_t offset = oh * 3600 + om * 60;
    return c == '+' ? t - offset : t + offset;
}

Date local_date_of(EpochSeconds t, int utc_offset_minutes) {
    std::int64_t local = t + static_cast<std::int64_t>(utc_offset_minutes) * 60;
    std::int64_t d = local / 86400;
    if (local < 0 && local % 86400 != 0) d -= 1;
    return Date{static_cast<std::int32_t>(d)};
}

int local_hour_of(EpochSeconds t, int utc_offset_minutes) {
    std::int64_t local = t + static_cast<std::int64_t>(utc_offset_minutes) * 60;
    std::int64_t s = local % 86400;
    if (s < 0) s += 86400;
    return static_cast<int>(s / 3600);
}

} // namespace airgam
