#pragma once

#include "airgam/features.hpp"
#include "airgam/gam.hpp"
#include "airgam/ingest.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace airgam {

/// Predicted-vs-measured totals over a period. percent_change is
/// 100 * (measured - predicted) / predicted, so a lockdown drop is negative.
struct ReductionReport {
    std::string key; // station_id, or class label after aggregation
    std::string pollutant;
    DateRange period;
    double predicted_total = 0.0; // ug/m3 * days
    double measured_total = 0.0;
    double percent_change = 0.0;
    int n_days = 0;
    int clamped_predictions = 0;
    int dropped_days = 0;
    // secondary, weather-naive statistic: measured change vs the same dates
    // one year earlier (absent when the prior-year window has no data)
    std::optional<double> year_over_year_percent;
};

/// Raw measured change between a period and the same dates a year earlier,
/// computed over per-day means so ragged coverage does not bias the totals.
std::optional<double> year_over_year_change(const DailySeries& measured, Field target,
                                            DateRange period);

/// Predicts each day of the period and compares totals over the days where
/// both a prediction and a measurement exist. Throws NoOverlap when none do.
ReductionReport estimate_reduction(const GamModel& model, const FeaturePipeline& pipeline,
                                   const DailySeries& measured, DateRange period);

/// Descriptive per-variable weather comparison between two period slices.
/// Quartiles use linear interpolation (type 7).
struct WeatherVariableSummary {
    std::string variable;
    int n_a = 0, n_b = 0;
    double mean_a = 0.0, mean_b = 0.0;
    std::array<double, 3> quartiles_a{}; // q25, q50, q75
    std::array<double, 3> quartiles_b{};
};

std::vector<WeatherVariableSummary> compare_weather(const DailySeries& period_a,
                                                    const DailySeries& period_b);

std::array<double, 3> quartiles(std::span<const double> values);

/// alpha weighting of the lockdown model in the convex mixture that best
/// explains measurements under mean absolute deviation.
struct MixtureFit {
    double alpha = 0.0;
    double objective = 0.0; // mean absolute deviation, ug/m3
    int n_days = 0;
    int breakpoints_examined = 0;
    // argmin over all breakpoints before clamping to [0, 1]
    double unconstrained_alpha = 0.0;
    double unconstrained_objective = 0.0;
};

/// Exact minimizer of f(a) = mean_t |a*m_ld + (1-a)*m_pre - m|: the objective
/// is convex piecewise linear in a, so f is evaluated at both endpoints and
/// at every breakpoint inside [0, 1]; ties take the smallest a.
MixtureFit fit_mixture(std::span<const double> m_ld, std::span<const double> m_pre,
                       std::span<const double> measured);

/// Date-aligned inputs for the rolling mixture.
struct AlignedTriples {
    std::vector<Date> dates; // strictly increasing
    std::vector<double> m_ld;
    std::vector<double> m_pre;
    std::vector<double> measured;
};

/// Trailing-window mixture series: for each date with a complete window of
/// aligned triples, the exact fit over that window. Dates with short history
/// or window gaps are absent from the output.
std::vector<std::pair<Date, double>> mixture_over_time(const AlignedTriples& triples,
                                                       int window_days);

struct MonthBreakdown {
    int month = 0;
    int n_days = 0;
    double predicted_total = 0.0;
    double measured_total = 0.0;
    std::optional<double> percent; // absent for empty months
};

/// Hypothetical year-long intervention: percent is
/// 100 * (predicted - measured) / measured, negative = reduction.
struct ScenarioReport {
    std::string key;
    std::string pollutant;
    int year = 0;
    double predicted_total = 0.0;
    double measured_total = 0.0;
    double hypothetical_reduction_percent = 0.0;
    std::vector<MonthBreakdown> months;
    int n_days = 0;
    int dropped_days = 0;
    int clamped_predictions = 0;
};

ScenarioReport hypothetical_scenario(const GamModel& ld_model, const FeaturePipeline& pipeline,
                                     const DailySeries& year_data, int year);

/// Pools station reports into class reports: totals are summed per class and
/// the percent change recomputed from the pooled totals.
std::vector<ReductionReport> aggregate_by_class(const std::vector<ReductionReport>& reports,
                                                const std::vector<StationMeta>& metas);

} // namespace airgam
