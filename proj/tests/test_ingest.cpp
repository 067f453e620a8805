#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "airgam/errors.hpp"
#include "airgam/ingest.hpp"

#include <algorithm>
#include <random>
#include <sstream>

using namespace airgam;

namespace {

const char* kHeader =
    "station_id,timestamp,no2,pm10,pm25,o3,co,so2,ws,wd,t,rh,p,dp,pressure,situation\n";

ParsedObservations parse_csv(const std::string& body) {
    std::istringstream in(std::string(kHeader) + body);
    return parse_observations(in);
}

} // namespace

TEST_CASE("fully populated row maps to one observation") {
    auto parsed = parse_csv(
        "sta1,2019-06-01T12:00:00Z,21.5,18.0,11.0,55.0,0.4,2.0,3.2,270.0,19.5,60.0,0.0,11.2,"
        "1013.2,sunny\n");
    REQUIRE(parsed.observations.size() == 1);
    const Observation& o = parsed.observations[0];
    CHECK(o.station_id == "sta1");
    CHECK(o.get(Field::No2) == 21.5);
    CHECK(o.get(Field::Wd) == 270.0);
    CHECK(o.get(Field::Pressure) == 1013.2);
    CHECK(o.situation == "sunny");
    CHECK(parsed.stats.rows_kept == 1);
}

TEST_CASE("sentinel cells become absent fields") {
    auto parsed = parse_csv("sta1,2019-06-01T12:00:00Z,,18.0,NA,55.0,,,3.2,,,,,,,\n");
    REQUIRE(parsed.observations.size() == 1);
    const Observation& o = parsed.observations[0];
    CHECK(!o.get(Field::No2));
    CHECK(!o.get(Field::Pm25));
    CHECK(o.get(Field::Pm10) == 18.0);
    CHECK(!o.get(Field::T));
    CHECK(!o.situation);
}

TEST_CASE("wind direction 360 normalizes to 0") {
    auto parsed = parse_csv("sta1,2019-06-01T12:00:00Z,1,,,,,,1,360.0,,,,,,\n");
    REQUIRE(parsed.observations.size() == 1);
    CHECK(parsed.observations[0].get(Field::Wd) == 0.0);
}

TEST_CASE("out-of-range fields are rejected and counted") {
    auto parsed = parse_csv(
        "sta1,2019-06-01T12:00:00Z,-5.0,,,,,,1,10,5,130.0,,,,\n"); // negative no2, rh 130
    REQUIRE(parsed.observations.size() == 1);
    CHECK(!parsed.observations[0].get(Field::No2));
    CHECK(!parsed.observations[0].get(Field::Rh));
    CHECK(parsed.stats.fields_rejected == 2);
}

TEST_CASE("bad timestamps skip the row with a counted error") {
    auto parsed = parse_csv(
        "sta1,yesterday,1,,,,,,,,,,,,,\n"
        "sta1,2019-06-01T12:00:00Z,2,,,,,,,,,,,,,\n");
    CHECK(parsed.observations.size() == 1);
    CHECK(parsed.stats.rows_skipped == 1);
    REQUIRE(parsed.stats.row_errors.size() == 1);
    CHECK(parsed.stats.row_errors[0].find("line 2") != std::string::npos);
}

TEST_CASE("header without timestamp column is fatal") {
    std::istringstream in("station_id,no2\nsta1,3.0\n");
    CHECK_THROWS_AS(parse_observations(in), MalformedHeader);
}

TEST_CASE("unknown columns are ignored with a warning") {
    std::istringstream in("station_id,timestamp,no2,flux\nsta1,2019-06-01T12:00:00Z,3.0,9\n");
    auto parsed = parse_observations(in);
    CHECK(parsed.observations.size() == 1);
    REQUIRE(parsed.stats.ignored_columns.size() == 1);
    CHECK(parsed.stats.ignored_columns[0] == "flux");
}

TEST_CASE("parse of serialize is the identity on present fields") {
    std::vector<Observation> obs;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        Observation o;
        o.station_id = "sta" + std::to_string(i % 3);
        o.timestamp = 1559390400 + i * 3600;
        for (int f = 0; f < kNumFields; ++f) {
            if (unit(rng) < 0.35) continue;
            double v = unit(rng) * 50.0;
            if (static_cast<Field>(f) == Field::Rh) v = unit(rng) * 100.0;
            o.values[f] = v;
        }
        if (unit(rng) < 0.3) o.situation = "cloudy";
        obs.push_back(std::move(o));
    }

    std::ostringstream out;
    write_observations_csv(out, obs);
    std::istringstream in(out.str());
    auto parsed = parse_observations(in);

    REQUIRE(parsed.observations.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(parsed.observations[i].station_id == obs[i].station_id);
        CHECK(parsed.observations[i].timestamp == obs[i].timestamp);
        for (int f = 0; f < kNumFields; ++f) {
            REQUIRE(parsed.observations[i].values[f].has_value() == obs[i].values[f].has_value());
            if (obs[i].values[f])
                CHECK(*parsed.observations[i].values[f] == doctest::Approx(*obs[i].values[f]).epsilon(1e-15));
        }
        CHECK(parsed.observations[i].situation == obs[i].situation);
    }
}

namespace {

std::vector<Observation> hourly_day(const std::string& station, Date day, Field field,
                                    const std::vector<double>& values) {
    std::vector<Observation> obs;
    for (std::size_t h = 0; h < values.size(); ++h) {
        Observation o;
        o.station_id = station;
        o.timestamp = static_cast<EpochSeconds>(day.days) * 86400 + h * 3600;
        o.set(field, values[h]);
        obs.push_back(std::move(o));
    }
    return obs;
}

} // namespace

TEST_CASE("daily mean with full coverage") {
    Date day = Date::from_ymd(2019, 6, 1);
    auto obs = hourly_day("sta1", day, Field::No2, std::vector<double>(24, 5.0));
    auto series = aggregate_daily(obs, {.coverage_threshold = 0.75, .utc_offset_minutes = 0});
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].rows.size() == 1);
    CHECK(series[0].rows[0].get(Field::No2) == 5.0);
    CHECK(series[0].rows[0].coverage_of(Field::No2) == 1.0);
}

TEST_CASE("below-threshold coverage drops the daily value but records coverage") {
    Date day = Date::from_ymd(2019, 6, 1);
    auto obs = hourly_day("sta1", day, Field::No2, std::vector<double>(12, 5.0));
    auto series = aggregate_daily(obs, {.coverage_threshold = 0.75, .utc_offset_minutes = 0});
    REQUIRE(series.size() == 1);
    CHECK(!series[0].rows[0].get(Field::No2));
    CHECK(series[0].rows[0].coverage_of(Field::No2) == doctest::Approx(0.5));
}

TEST_CASE("wind direction aggregates as a vector mean") {
    Date day = Date::from_ymd(2019, 6, 1);
    std::vector<double> wd;
    for (int h = 0; h < 24; ++h) wd.push_back(h % 2 == 0 ? 350.0 : 10.0);
    auto obs = hourly_day("sta1", day, Field::Wd, wd);
    auto series = aggregate_daily(obs, {.coverage_threshold = 0.75, .utc_offset_minutes = 0});
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].rows[0].get(Field::Wd));
    CHECK(*series[0].rows[0].get(Field::Wd) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("vector mean rotates with its inputs") {
    Date day = Date::from_ymd(2019, 6, 1);
    std::vector<double> base = {10, 40, 80, 350, 200, 170, 90, 10, 30, 300, 330, 15,
                                20, 60, 100, 340, 180, 160, 95, 5,  45, 280, 310, 25};
    double theta = 73.25;
    std::vector<double> rotated;
    for (double v : base) rotated.push_back(std::fmod(v + theta, 360.0));

    auto obs_a = hourly_day("a", day, Field::Wd, base);
    auto obs_b = hourly_day("b", day, Field::Wd, rotated);
    obs_a.insert(obs_a.end(), obs_b.begin(), obs_b.end());
    auto series = aggregate_daily(obs_a, {.coverage_threshold = 0.5, .utc_offset_minutes = 0});
    REQUIRE(series.size() == 2);
    double mean_a = *series[0].rows[0].get(Field::Wd);
    double mean_b = *series[1].rows[0].get(Field::Wd);
    double diff = std::fmod(mean_b - mean_a + 720.0, 360.0);
    CHECK(diff == doctest::Approx(theta).epsilon(1e-9));
}

TEST_CASE("aggregation is permutation invariant") {
    Date day = Date::from_ymd(2019, 6, 1);
    std::vector<double> values;
    for (int h = 0; h < 24; ++h) values.push_back(3.0 + 0.5 * h);
    auto obs = hourly_day("sta1", day, Field::T, values);
    auto shuffled = obs;
    std::mt19937_64 rng(11);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    AggregateConfig cfg{.coverage_threshold = 0.75, .utc_offset_minutes = 0};
    auto a = aggregate_daily(obs, cfg);
    auto b = aggregate_daily(shuffled, cfg);
    REQUIRE(a.size() == b.size());
    CHECK(*a[0].rows[0].get(Field::T) == *b[0].rows[0].get(Field::T));
}

TEST_CASE("local-day boundaries follow the configured offset") {
    // 23:30 UTC lands on the next local day at +60 minutes
    Observation o;
    o.station_id = "sta1";
    o.timestamp = *parse_iso8601("2019-06-01T23:00:00Z");
    o.set(Field::No2, 7.0);
    auto series = aggregate_daily({o}, {.coverage_threshold = 0.01, .utc_offset_minutes = 60});
    REQUIRE(series.size() == 1);
    CHECK(series[0].rows[0].date == Date::from_ymd(2019, 6, 2));
}

TEST_CASE("slice_period boundaries are inclusive") {
    DailySeries series;
    series.station_id = "sta1";
    for (int i = 0; i < 365; ++i) {
        DailyRow row;
        row.date = Date::from_ymd(2020, 1, 1).add_days(i);
        row.values[0] = 1.0;
        series.rows.push_back(row);
    }
    DailySeries ld = slice_period(series, Date::from_ymd(2020, 3, 16), Date::from_ymd(2020, 4, 27));
    CHECK(ld.rows.size() == 43);

    DailySeries outside =
        slice_period(series, Date::from_ymd(2021, 1, 1), Date::from_ymd(2021, 2, 1));
    CHECK(outside.rows.empty());

    DailySeries all = slice_period(series, series.rows.front().date, series.rows.back().date);
    CHECK(all.rows.size() == series.rows.size());
}

TEST_CASE("station metadata round trip") {
    std::vector<StationMeta> metas = {
        {"zur", "EasternSwitzerland", "High Traffic", 47.37, 8.54},
        {"stg", "EasternSwitzerland", "Low Traffic", std::nullopt, std::nullopt},
    };
    std::ostringstream out;
    write_station_meta_csv(out, metas);
    std::istringstream in(out.str());
    auto parsed = parse_station_meta(in);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].station_id == "zur");
    CHECK(parsed[0].class_label == "High Traffic");
    CHECK(parsed[0].latitude == doctest::Approx(47.37));
    CHECK(!parsed[1].latitude);
}
