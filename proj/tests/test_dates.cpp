#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "airgam/dates.hpp"

using namespace airgam;

TEST_CASE("civil round trip across the calendar") {
    for (int year : {1970, 1999, 2000, 2016, 2019, 2020, 2021}) {
        for (int month = 1; month <= 12; ++month) {
            for (int day : {1, 15, days_in_month(year, month)}) {
                Date d = Date::from_ymd(year, month, day);
                int y2, m2, d2;
                d.to_ymd(y2, m2, d2);
                CHECK(y2 == year);
                CHECK(m2 == month);
                CHECK(d2 == day);
            }
        }
    }
}

TEST_CASE("epoch anchor and weekday") {
    CHECK(Date::from_ymd(1970, 1, 1).days == 0);
    CHECK(Date::from_ymd(1970, 1, 1).weekday_mon0() == 3); // Thursday
    CHECK(Date::from_ymd(2020, 3, 16).weekday_mon0() == 0); // Monday
    CHECK(Date::from_ymd(2020, 3, 22).weekday_mon0() == 6); // Sunday
}

TEST_CASE("day of year and leap years") {
    CHECK(Date::from_ymd(2019, 1, 1).day_of_year() == 1);
    CHECK(Date::from_ymd(2019, 12, 31).day_of_year() == 365);
    CHECK(Date::from_ymd(2020, 12, 31).day_of_year() == 366);
    CHECK(is_leap_year(2020));
    CHECK(!is_leap_year(2019));
    CHECK(!is_leap_year(1900));
    CHECK(is_leap_year(2000));
}

TEST_CASE("month arithmetic clamps the day") {
    CHECK(Date::from_ymd(2019, 3, 1).add_months(-3) == Date::from_ymd(2018, 12, 1));
    CHECK(Date::from_ymd(2020, 1, 31).add_months(1) == Date::from_ymd(2020, 2, 29));
    CHECK(Date::from_ymd(2019, 1, 31).add_months(1) == Date::from_ymd(2019, 2, 28));
    CHECK(Date::from_ymd(2019, 1, 1).add_months(24) == Date::from_ymd(2021, 1, 1));
    CHECK(Date::from_ymd(2019, 1, 1).add_months(-24) == Date::from_ymd(2017, 1, 1));
}

TEST_CASE("date parsing") {
    CHECK(parse_date("2020-03-16") == Date::from_ymd(2020, 3, 16));
    CHECK(!parse_date("2020-13-01"));
    CHECK(!parse_date("2019-02-29"));
    CHECK(!parse_date("20-03-16"));
    CHECK(parse_date("2020-02-29") == Date::from_ymd(2020, 2, 29));
}

TEST_CASE("iso8601 parsing with offsets") {
    auto base = parse_iso8601("2020-03-16T00:00:00Z");
    REQUIRE(base);
    CHECK(*base == static_cast<std::int64_t>(Date::from_ymd(2020, 3, 16).days) * 86400);

    CHECK(parse_iso8601("2020-03-16 01:30:00") == *base + 5400);
    CHECK(parse_iso8601("2020-03-16T01:00:00+01:00") == *base);
    CHECK(parse_iso8601("2020-03-15T23:00:00-01:00") == *base);
    CHECK(parse_iso8601("2020-03-16T01:00:00+0100") == *base);
    CHECK(parse_iso8601("2020-03-16T00:00") == *base);
    CHECK(!parse_iso8601("not a time"));
    CHECK(!parse_iso8601("2020-03-16T25:00:00Z"));
}

TEST_CASE("local date under a fixed offset") {
    auto t = parse_iso8601("2020-03-16T23:30:00Z");
    REQUIRE(t);
    CHECK(local_date_of(*t, 0) == Date::from_ymd(2020, 3, 16));
    CHECK(local_date_of(*t, 60) == Date::from_ymd(2020, 3, 17));
    CHECK(local_hour_of(*t, 0) == 23);
    CHECK(local_hour_of(*t, 60) == 0);
    auto early = parse_iso8601("2020-03-16T00:10:00Z");
    CHECK(local_date_of(*early, -60) == Date::from_ymd(2020, 3, 15));
}

TEST_CASE("ranges") {
    DateRange r{Date::from_ymd(2020, 3, 16), Date::from_ymd(2020, 4, 27)};
    CHECK(r.n_days() == 43);
    CHECK(r.contains(Date::from_ymd(2020, 4, 1)));
    CHECK(!r.contains(Date::from_ymd(2020, 4, 28)));
}
