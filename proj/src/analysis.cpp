#include "airgam/analysis.hpp"

#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

namespace airgam {

ReductionReport estimate_reduction(const GamModel& model, const FeaturePipeline& pipeline,
                                   const DailySeries& measured, DateRange period) {
    DailySeries window = slice_period(measured, period.start, period.end);
    if (window.rows.empty())
        throw NoOverlap("no measurements in " + period.to_string() + " for station " +
                        measured.station_id);

    // rows need both the features (for the prediction) and the measurement
    DesignMatrix design = build_design(window, pipeline);
    Prediction pred = predict(model, design);

    ReductionReport report;
    report.key = measured.station_id;
    report.pollutant = design.target;
    report.period = period;
    report.n_days = design.n_rows();
    report.clamped_predictions = pred.clamped;
    report.dropped_days = design.total_dropped();
    report.predicted_total = pred.concentration.sum();
    report.measured_total = design.target_values.sum();
    report.percent_change =
        100.0 * (report.measured_total - report.predicted_total) / report.predicted_total;
    report.year_over_year_percent = year_over_year_change(measured, pipeline.target, period);
    return report;
}

std::optional<double> year_over_year_change(const DailySeries& measured, Field target,
                                            DateRange period) {
    DateRange prior{period.start.add_months(-12), period.end.add_months(-12)};
    auto mean_over = [&](DateRange r) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const DailyRow& row : measured.rows) {
            if (!r.contains(row.date)) continue;
            if (auto v = row.get(target)) {
                sum += *v;
                n++;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    };
    auto now = mean_over(period);
    auto before = mean_over(prior);
    if (!now || !before || *before <= 0.0) return std::nullopt;
    return 100.0 * (*now - *before) / *before;
}

std::array<double, 3> quartiles(std::span<const double> values) {
    if (values.empty()) throw InsufficientData("quartiles of empty data");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return {quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.50),
            quantile_sorted(sorted, 0.75)};
}

std::vector<WeatherVariableSummary> compare_weather(const DailySeries& period_a,
                                                    const DailySeries& period_b) {
    if (period_a.rows.empty() || period_b.rows.empty())
        throw NoOverlap("weather comparison needs non-empty slices on both sides");

    const Field weather_fields[] = {Field::Ws, Field::Wd, Field::T,  Field::Rh,
                                    Field::P,  Field::Dp, Field::Pressure};
    std::vector<WeatherVariableSummary> out;
    for (Field f : weather_fields) {
        std::vector<double> a, b;
        for (const DailyRow& r : period_a.rows)
            if (auto v = r.get(f)) a.push_back(*v);
        for (const DailyRow& r : period_b.rows)
            if (auto v = r.get(f)) b.push_back(*v);
        if (a.empty() && b.empty()) continue;

        WeatherVariableSummary s;
        s.variable = field_name(f);
        s.n_a = static_cast<int>(a.size());
        s.n_b = static_cast<int>(b.size());
        if (!a.empty()) {
            s.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
            s.quartiles_a = quartiles(a);
        }
        if (!b.empty()) {
            s.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
            s.quartiles_b = quartiles(b);
        }
        out.push_back(std::move(s));
    }
    return out;
}

MixtureFit fit_mixture(std::span<const double> m_ld, std::span<const double> m_pre,
                       std::span<const double> measured) {
    const std::size_t n = measured.size();
    if (m_ld.size() != n || m_pre.size() != n)
        throw LengthMismatch("mixture inputs differ in length");
    if (n == 0) throw NoOverlap("mixture fit needs at least one aligned day");

    // f(a) = mean |a*d_t + r_t| with d = m_ld - m_pre, r = m_pre - m
    std::vector<double> d(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = m_ld[i] - m_pre[i];
        r[i] = m_pre[i] - measured[i];
    }
    auto objective = [&](double a) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += std::abs(a * d[i] + r[i]);
        return sum / static_cast<double>(n);
    };

    std::vector<double> breakpoints;
    breakpoints.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] != 0.0) breakpoints.push_back(-r[i] / d[i]);
    std::sort(breakpoints.begin(), breakpoints.end());

    MixtureFit fit;
    fit.n_days = static_cast<int>(n);
    fit.breakpoints_examined = static_cast<int>(breakpoints.size());

    // constrained scan: endpoints plus interior breakpoints, ascending, so the
    // smallest alpha wins ties
    double best_a = 0.0, best_f = objective(0.0);
    auto consider = [&](double a) {
        double f = objective(a);
        if (f < best_f) {
            best_f = f;
            best_a = a;
        }
    };
    for (double a : breakpoints)
        if (a > 0.0 && a < 1.0) consider(a);
    consider(1.0);
    fit.alpha = best_a;
    fit.objective = best_f;

    // unconstrained argmin over all breakpoints (convex PL attains its
    // minimum at a breakpoint whenever one exists)
    double u_best_a = best_a, u_best_f = best_f;
    for (double a : breakpoints) {
        double f = objective(a);
        if (f < u_best_f || (f == u_best_f && a < u_best_a)) {
            u_best_f = f;
            u_best_a = a;
        }
    }
    fit.unconstrained_alpha = u_best_a;
    fit.unconstrained_objective = u_best_f;
    return fit;
}

std::vector<std::pair<Date, double>> mixture_over_time(const AlignedTriples& triples,
                                                       int window_days) {
    if (window_days < 7) throw ConfigError("mixture window must be at least 7 days");
    std::unordered_map<std::int32_t, int> index;
    index.reserve(triples.dates.size());
    for (std::size_t i = 0; i < triples.dates.size(); ++i)
        index[triples.dates[i].days] = static_cast<int>(i);

    std::vector<std::pair<Date, double>> out;
    std::vector<double> ld, pre, meas;
    for (std::size_t i = 0; i < triples.dates.size(); ++i) {
        ld.clear();
        pre.clear();
        meas.clear();
        bool complete = true;
        for (int back = window_days - 1; back >= 0; --back) {
            auto it = index.find(triples.dates[i].days - back);
            if (it == index.end()) {
                complete = false;
                break;
            }
            ld.push_back(triples.m_ld[it->second]);
            pre.push_back(triples.m_pre[it->second]);
            meas.push_back(triples.measured[it->second]);
        }
        if (!complete) continue;
        out.emplace_back(triples.dates[i], fit_mixture(ld, pre, meas).alpha);
    }
    return out;
}

ScenarioReport hypothetical_scenario(const GamModel& ld_model, const FeaturePipeline& pipeline,
                                     const DailySeries& year_data, int year) {
    DateRange whole_year{Date::from_ymd(year, 1, 1), Date::from_ymd(year, 12, 31)};
    DailySeries window = slice_period(year_data, whole_year.start, whole_year.end);
    if (window.rows.empty())
        throw NoOverlap("no data for year " + std::to_string(year) + " at station " +
                        year_data.station_id);

    DesignMatrix design = build_design(window, pipeline);
    Prediction pred = predict(ld_model, design);

    ScenarioReport report;
    report.key = year_data.station_id;
    report.pollutant = design.target;
    report.year = year;
    report.n_days = design.n_rows();
    report.dropped_days = whole_year.n_days() - design.n_rows();
    report.clamped_predictions = pred.clamped;

    std::array<MonthBreakdown, 12> months{};
    for (int m = 0; m < 12; ++m) months[m].month = m + 1;
    for (int i = 0; i < design.n_rows(); ++i) {
        MonthBreakdown& mb = months[design.dates[i].month() - 1];
        mb.n_days++;
        mb.predicted_total += pred.concentration(i);
        mb.measured_total += design.target_values(i);
    }
    for (MonthBreakdown& mb : months) {
        if (mb.n_days > 0 && mb.measured_total > 0.0)
            mb.percent = 100.0 * (mb.predicted_total - mb.measured_total) / mb.measured_total;
        report.predicted_total += mb.predicted_total;
        report.measured_total += mb.measured_total;
        report.months.push_back(mb);
    }
    report.hypothetical_reduction_percent =
        100.0 * (report.predicted_total - report.measured_total) / report.measured_total;
    return report;
}

std::vector<ReductionReport> aggregate_by_class(const std::vector<ReductionReport>& reports,
                                                const std::vector<StationMeta>& metas) {
    std::unordered_map<std::string, const StationMeta*> by_station;
    for (const StationMeta& m : metas) by_station[m.station_id] = &m;

    std::map<std::string, ReductionReport> classes; // ordered by label for stable output
    for (const ReductionReport& r : reports) {
        auto it = by_station.find(r.key);
        if (it == by_station.end())
            throw UnknownStation("no metadata for station '" + r.key + "'");
        const std::string& label = it->second->class_label;
        auto [cls, inserted] = classes.try_emplace(label);
        ReductionReport& agg = cls->second;
        if (inserted) {
            agg.key = label;
            agg.pollutant = r.pollutant;
            agg.period = r.period;
        }
        agg.predicted_total += r.predicted_total;
        agg.measured_total += r.measured_total;
        agg.n_days += r.n_days;
        agg.clamped_predictions += r.clamped_predictions;
        agg.dropped_days += r.dropped_days;
    }
    std::vector<ReductionReport> out;
    for (auto& [label, agg] : classes) {
        agg.percent_change =
            100.0 * (agg.measured_total - agg.predicted_total) / agg.predicted_total;
        out.push_back(std::move(agg));
    }
    return out;
}

} // namespace airgam
