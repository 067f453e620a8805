#include "airgam/ingest.hpp"

#include "airgam/csv.hpp"
#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace airgam {

namespace {

constexpr const char* kFieldNames[kNumFields] = {
    "no2", "pm10", "pm25", "o3", "co", "so2", "ws",
    "wd",  "t",    "rh",   "p",  "dp", "pressure"};

constexpr std::size_t kMaxRecordedRowErrors = 50;

double normalize_degrees(double wd) {
    double v = std::fmod(wd, 360.0);
    if (v < 0) v += 360.0;
    // fmod can return exactly 360.0 - eps artifacts only below 360; 360 itself maps to 0.
    if (v == 360.0) v = 0.0;
    return v;
}

/// Field-level validation. Returns nullopt when the value is physically
/// impossible and must be treated as absent.
std::optional<double> validate_field(Field f, double v) {
    if (!std::isfinite(v)) return std::nullopt;
    switch (f) {
        case Field::Wd:
            return normalize_degrees(v);
        case Field::Rh:
            if (v < 0.0 || v > 100.0) return std::nullopt;
            return v;
        case Field::Ws:
        case Field::P:
            if (v < 0.0) return std::nullopt;
            return v;
        default:
            if (is_pollutant(f) && v < 0.0) return std::nullopt;
            return v;
    }
}

} // namespace

const char* field_name(Field f) { return kFieldNames[static_cast<int>(f)]; }

std::optional<Field> field_from_name(const std::string& name) {
    for (int i = 0; i < kNumFields; ++i)
        if (name == kFieldNames[i]) return static_cast<Field>(i);
    return std::nullopt;
}

bool is_pollutant(Field f) { return static_cast<int>(f) <= static_cast<int>(Field::So2); }

ParsedObservations parse_observations(std::istream& in) {
    ParsedObservations result;
    std::vector<std::string> lines = read_lines(in);
    if (lines.empty()) throw MalformedHeader("empty input");

    std::vector<std::string> header = split_csv_line(lines[0]);
    int col_station = -1, col_timestamp = -1, col_situation = -1;
    std::vector<std::pair<int, Field>> field_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = trim(header[i]);
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (name == "station_id") {
            col_station = static_cast<int>(i);
        } else if (name == "timestamp") {
            col_timestamp = static_cast<int>(i);
        } else if (name == "situation") {
            col_situation = static_cast<int>(i);
        } else if (auto f = field_from_name(name)) {
            field_cols.emplace_back(static_cast<int>(i), *f);
        } else {
            result.stats.ignored_columns.push_back(name);
        }
    }
    if (col_station < 0 || col_timestamp < 0)
        throw MalformedHeader("need station_id and timestamp columns");

    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        result.stats.rows_total++;
        std::vector<std::string> cells = split_csv_line(lines[li]);
        auto cell = [&](int idx) -> std::string {
            return idx >= 0 && idx < static_cast<int>(cells.size()) ? cells[idx] : std::string();
        };

        auto record_row_error = [&](const std::string& why) {
            result.stats.rows_skipped++;
            if (result.stats.row_errors.size() < kMaxRecordedRowErrors)
                result.stats.row_errors.push_back("line " + std::to_string(li + 1) + ": " + why);
        };

        std::string station = trim(cell(col_station));
        if (station.empty()) {
            record_row_error("empty station_id");
            continue;
        }
        auto ts = parse_iso8601(trim(cell(col_timestamp)));
        if (!ts) {
            record_row_error("unparseable timestamp '" + trim(cell(col_timestamp)) + "'");
            continue;
        }

        Observation obs;
        obs.station_id = station;
        obs.timestamp = *ts - (*ts % 3600 + 3600) % 3600; // floor to hour
        for (auto [idx, f] : field_cols) {
            std::string c = cell(idx);
            if (is_missing_cell(c)) continue;
            auto v = parse_double_cell(c);
            if (!v) {
                result.stats.fields_rejected++;
                continue;
            }
            auto checked = validate_field(f, *v);
            if (!checked) {
                result.stats.fields_rejected++;
                continue;
            }
            obs.set(f, *checked);
        }
        if (col_situation >= 0 && !is_missing_cell(cell(col_situation)))
            obs.situation = trim(cell(col_situation));

        result.observations.push_back(std::move(obs));
        result.stats.rows_kept++;
    }
    return result;
}

void write_observations_csv(std::ostream& out, const std::vector<Observation>& obs) {
    std::vector<std::string> header = {"station_id", "timestamp"};
    for (int i = 0; i < kNumFields; ++i) header.push_back(kFieldNames[i]);
    header.push_back("situation");
    out << join_csv_line(header) << "\n";

    for (const Observation& o : obs) {
        std::vector<std::string> cells;
        cells.push_back(o.station_id);
        Date d = local_date_of(o.timestamp, 0);
        int hour = local_hour_of(o.timestamp, 0);
        char ts[32];
        std::snprintf(ts, sizeof(ts), "%sT%02d:00:00Z", d.to_string().c_str(), hour);
        cells.push_back(ts);
        for (int i = 0; i < kNumFields; ++i) {
            const auto& v = o.values[i];
            if (v) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.17g", *v);
                cells.push_back(buf);
            } else {
                cells.push_back("");
            }
        }
        cells.push_back(o.situation.value_or(""));
        out << join_csv_line(cells) << "\n";
    }
}

std::vector<StationMeta> parse_station_meta(std::istream& in) {
    std::vector<std::string> lines = read_lines(in);
    if (lines.empty()) throw MalformedHeader("empty station metadata");
    std::vector<std::string> header = split_csv_line(lines[0]);
    std::map<std::string, int> cols;
    for (std::size_t i = 0; i < header.size(); ++i) cols[trim(header[i])] = static_cast<int>(i);
    if (!cols.count("station_id"))
        throw MalformedHeader("station metadata needs station_id column");

    std::vector<StationMeta> metas;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        std::vector<std::string> cells = split_csv_line(lines[li]);
        auto cell = [&](const char* name) -> std::string {
            auto it = cols.find(name);
            if (it == cols.end() || it->second >= static_cast<int>(cells.size())) return {};
            return trim(cells[it->second]);
        };
        StationMeta m;
        m.station_id = cell("station_id");
        if (m.station_id.empty()) continue;
        m.region = cell("region");
        m.class_label = cell("class_label");
        if (auto lat = parse_double_cell(cell("lat"))) m.latitude = *lat;
        if (auto lon = parse_double_cell(cell("lon"))) m.longitude = *lon;
        metas.push_back(std::move(m));
    }
    return metas;
}

void write_station_meta_csv(std::ostream& out, const std::vector<StationMeta>& metas) {
    out << "station_id,region,class_label,lat,lon\n";
    for (const StationMeta& m : metas) {
        std::vector<std::string> cells = {m.station_id, m.region, m.class_label, "", ""};
        char buf[40];
        if (m.latitude) {
            std::snprintf(buf, sizeof(buf), "%.17g", *m.latitude);
            cells[3] = buf;
        }
        if (m.longitude) {
            std::snprintf(buf, sizeof(buf), "%.17g", *m.longitude);
            cells[4] = buf;
        }
        out << join_csv_line(cells) << "\n";
    }
}

const DailyRow* DailySeries::find(Date d) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), d,
                               [](const DailyRow& r, Date x) { return r.date < x; });
    if (it == rows.end() || it->date != d) return nullptr;
    return &*it;
}

std::optional<DateRange> DailySeries::span() const {
    if (rows.empty()) return std::nullopt;
    return DateRange{rows.front().date, rows.back().date};
}

std::vector<DailySeries> aggregate_daily(const std::vector<Observation>& obs,
                                         const AggregateConfig& config) {
    struct HourAccum {
        // per field: sum and count; wind direction additionally as unit vectors
        std::array<double, kNumFields> sum{};
        std::array<int, kNumFields> count{};
        double wd_sin = 0.0, wd_cos = 0.0;
    };
    // station -> date -> hour -> accumulator; map keys give deterministic order
    std::map<std::string, std::map<Date, std::map<int, HourAccum>>> grid;

    for (const Observation& o : obs) {
        Date d = local_date_of(o.timestamp, config.utc_offset_minutes);
        int hour = local_hour_of(o.timestamp, config.utc_offset_minutes);
        HourAccum& acc = grid[o.station_id][d][hour];
        for (int i = 0; i < kNumFields; ++i) {
            if (!o.values[i]) continue;
            acc.sum[i] += *o.values[i];
            acc.count[i] += 1;
            if (static_cast<Field>(i) == Field::Wd) {
                double rad = *o.values[i] * std::numbers::pi / 180.0;
                acc.wd_sin += std::sin(rad);
                acc.wd_cos += std::cos(rad);
            }
        }
    }

    std::vector<DailySeries> out;
    for (auto& [station, days] : grid) {
        DailySeries series;
        series.station_id = station;
        for (auto& [date, hours] : days) {
            DailyRow row;
            row.date = date;
            for (int i = 0; i < kNumFields; ++i) {
                const bool is_wd = static_cast<Field>(i) == Field::Wd;
                int hours_present = 0;
                double day_sum = 0.0, vx = 0.0, vy = 0.0;
                for (auto& [hour, acc] : hours) {
                    if (acc.count[i] == 0) continue;
                    hours_present++;
                    day_sum += acc.sum[i] / acc.count[i];
                    if (is_wd) {
                        vx += acc.wd_sin / acc.count[i];
                        vy += acc.wd_cos / acc.count[i];
                    }
                }
                double coverage = hours_present / 24.0;
                row.coverage[i] = coverage;
                if (hours_present == 0 || coverage < config.coverage_threshold) continue;
                if (is_wd) {
                    double norm = std::hypot(vx / hours_present, vy / hours_present);
                    if (norm < 1e-12) continue; // opposing directions cancel: undefined mean
                    double deg = std::atan2(vx, vy) * 180.0 / std::numbers::pi;
                    if (deg < 0) deg += 360.0;
                    if (deg >= 360.0) deg -= 360.0;
                    row.values[i] = deg;
                } else {
                    row.values[i] = day_sum / hours_present;
                }
            }
            series.rows.push_back(std::move(row));
        }
        out.push_back(std::move(series));
    }
    return out;
}

DailySeries slice_period(const DailySeries& series, Date start, Date end) {
    DailySeries out;
    out.station_id = series.station_id;
    for (const DailyRow& r : series.rows)
        if (start <= r.date && r.date <= end) out.rows.push_back(r);
    return out;
}

} // namespace airgam
