#pragma once

#include "airgam/dates.hpp"

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace airgam {

/// Numeric per-hour fields carried through the pipeline. Pollutant
/// concentrations are in ug/m3 (CO passed through opaquely), weather fields
/// in their native units (m/s, degrees, C, %, mm, C, hPa).
enum class Field : int {
    No2 = 0,
    Pm10,
    Pm25,
    O3,
    Co,
    So2,
    Ws,
    Wd,
    T,
    Rh,
    P,
    Dp,
    Pressure,
};
inline constexpr int kNumFields = 13;

const char* field_name(Field f);
std::optional<Field> field_from_name(const std::string& name);
bool is_pollutant(Field f);

struct StationMeta {
    std::string station_id;
    std::string region;      // e.g. "EasternSwitzerland", "Beijing"
    std::string class_label; // e.g. "High Traffic", "Rural", "Road"
    std::optional<double> latitude;
    std::optional<double> longitude;
};

/// One hourly record from one station. Absent fields were missing or
/// rejected (out of physical range) at parse time.
struct Observation {
    std::string station_id;
    EpochSeconds timestamp = 0; // UTC, floored to the hour
    std::array<std::optional<double>, kNumFields> values;
    std::optional<std::string> situation;

    std::optional<double> get(Field f) const { return values[static_cast<int>(f)]; }
    void set(Field f, double v) { values[static_cast<int>(f)] = v; }
};

struct ParseStats {
    std::int64_t rows_total = 0;
    std::int64_t rows_kept = 0;
    std::int64_t rows_skipped = 0;       // unparseable timestamp / short row
    std::int64_t fields_rejected = 0;    // non-numeric or out-of-range cells
    std::vector<std::string> ignored_columns;
    std::vector<std::string> row_errors; // "line N: reason", capped
};

struct ParsedObservations {
    std::vector<Observation> observations;
    ParseStats stats;
};

/// Parses the observation CSV schema:
///   station_id,timestamp,no2,pm10,pm25,o3,co,so2,ws,wd,t,rh,p,dp,pressure,situation
/// Column order is free; unrecognized columns are ignored and counted.
/// Throws MalformedHeader when no timestamp or station column is present.
/// Bad rows are skipped and counted, never fatal.
ParsedObservations parse_observations(std::istream& in);

/// Writes observations back in the same schema (used by the synth command and
/// round-trip tests).
void write_observations_csv(std::ostream& out, const std::vector<Observation>& obs);

/// Station metadata CSV: station_id,region,class_label,lat,lon
std::vector<StationMeta> parse_station_meta(std::istream& in);
void write_station_meta_csv(std::ostream& out, const std::vector<StationMeta>& metas);

struct DailyRow {
    Date date;
    std::array<std::optional<double>, kNumFields> values;   // daily means
    std::array<double, kNumFields> coverage{};              // fraction of 24 hours

    std::optional<double> get(Field f) const { return values[static_cast<int>(f)]; }
    double coverage_of(Field f) const { return coverage[static_cast<int>(f)]; }
};

/// Date-indexed daily aggregates for one station; dates strictly increasing.
struct DailySeries {
    std::string station_id;
    std::vector<DailyRow> rows;

    const DailyRow* find(Date d) const;
    std::optional<DateRange> span() const;
};

struct AggregateConfig {
    double coverage_threshold = 0.75; // field kept iff present-hour fraction >= this
    int utc_offset_minutes = 0;       // fixed local-day boundary shift
};

/// Aggregates hourly observations to daily resolution, one series per station.
/// A field's daily mean is present iff its hour coverage >= the threshold.
/// Wind direction is aggregated as the direction of the mean unit vector.
std::vector<DailySeries> aggregate_daily(const std::vector<Observation>& obs,
                                         const AggregateConfig& config);

/// Rows with start <= date <= end, order preserved.
DailySeries slice_period(const DailySeries& series, Date start, Date end);

} // namespace airgam
