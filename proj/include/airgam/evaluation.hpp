#pragma once

#include "airgam/features.hpp"
#include "airgam/gam.hpp"
#include "airgam/ingest.hpp"
#include "airgam/selection.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace airgam {

/// One temporal validation fold. Pre-lockdown folds have a single train range
/// strictly before the test month; lockdown folds train on the complement of
/// the test block, which splits the train window in two.
struct Fold {
    std::vector<DateRange> train; // one or two disjoint ranges
    DateRange test;
    std::string label;

    bool in_train(Date d) const;
};

struct FoldPlan {
    std::vector<Fold> folds;
    // folds rejected at construction (label, reason); never silently dropped
    std::vector<std::pair<std::string, std::string>> skipped;
};

inline constexpr std::array<int, 6> kDefaultTrainLengthsMonths = {3, 6, 9, 12, 18, 24};

/// Rolling-origin folds: for each month-start cut-off in eval_year and each
/// train length L, train = [cut-off - L months, cut-off) and test is the
/// following month. Folds whose train window starts before data_span are
/// recorded as skipped (InsufficientHistory), as are folds whose test month
/// lies entirely outside the data.
FoldPlan make_pre_ld_folds(int eval_year,
                           std::span<const int> train_lengths_months,
                           std::optional<DateRange> data_span = std::nullopt);

/// Non-overlapping test blocks tile the lockdown period from its start; the
/// train set is the remainder of the period. A trailing partial block is not
/// used as test data. Throws PeriodTooShort for fewer than two blocks.
FoldPlan make_ld_folds(DateRange ld_period, int test_block_days = 3);

double rmse(std::span<const double> pred, std::span<const double> meas);
double r2(std::span<const double> pred, std::span<const double> meas);

struct FoldResult {
    std::string label;
    bool skipped = false;
    std::string skip_reason;
    int n_test = 0;
    double rmse = 0.0;
    std::optional<double> r2; // absent when the fold has < 2 points or zero variance
};

struct CvReport {
    std::string protocol; // "pre_ld" or "ld"
    std::string station_id;
    std::vector<FoldResult> folds;
    int n_retained = 0;
    int n_skipped = 0;
    double mean_rmse = 0.0;
    double sd_rmse = 0.0;
    std::optional<double> mean_r2;
    std::optional<double> sd_r2;

    void recompute_aggregates();
};

/// Model produced for one fold plus the feature transform it was fitted with.
struct FoldModel {
    GamModel model;
    FeaturePipeline pipeline;
};

using FoldFitter = std::function<FoldModel(const DailySeries& train_data)>;

/// Fits each fold's model with `fitter` on the train slice and scores the
/// test slice on the concentration scale. Fold-level failures become skipped
/// entries with reasons. Deterministic for deterministic fitters.
CvReport cross_validate(const DailySeries& data, const FoldPlan& plan,
                        const FoldFitter& fitter, const std::string& protocol);

/// Fixed-feature fitter: fits the PCA transform (when used) on the fold's
/// train rows, then the GAM on the given specs.
FoldFitter make_fixed_spec_fitter(Field target, std::vector<FeatureSpec> specs,
                                  FitConfig config);

/// Full-protocol fitter: per-fold forward selection over the candidate pool
/// followed by the mandatory weekday augmentation.
FoldFitter make_selection_fitter(Field target, std::vector<FeatureSpec> pool,
                                 SelectionConfig config);

// ---------------------------------------------------------------------------
// Synthetic ground-truth generator (the oracle for the test suite).

struct SynthDriver {
    Field field = Field::T;
    double mean = 0.0;
    double seasonal_amplitude = 0.0; // annual sinusoid on the driver itself
    double ar_coefficient = 0.0;     // AR(1) memory
    double ar_sigma = 1.0;           // innovation s.d.
};

struct SynthSmooth {
    Field driver = Field::T;
    enum class Shape { Linear, Sine } shape = Shape::Linear;
    double amplitude = 1.0; // linear: slope; sine: amplitude
    double frequency = 1.0; // sine: s(x) = amplitude * sin(frequency * x + phase)
    double phase = 0.0;

    double value(double x) const;
};

struct SynthConfig {
    Date start = Date::from_ymd(2018, 1, 1);
    int n_days = 730;
    double intercept = 3.0;
    Field target = Field::No2;
    std::vector<SynthDriver> drivers;
    std::vector<SynthSmooth> smooths;
    std::array<double, 7> weekday_multipliers = {1, 1, 1, 1, 1, 1, 1}; // Monday first
    double noise_sigma = 0.1; // on the ln scale
    std::uint64_t seed = 1;
};

/// Every generated component, exposed for oracle comparisons.
struct SynthTruth {
    std::vector<Date> dates;
    std::vector<std::vector<double>> driver_values; // per driver
    std::vector<std::vector<double>> smooth_values; // per smooth
    std::vector<double> weekday_ln_effect;
    std::vector<double> noise;
    std::vector<double> ln_y;
    double intercept = 0.0;
};

/// Deterministic for a given seed. Response:
///   ln Y = intercept + sum_j s_j(driver_j) + ln(weekday multiplier) + N(0, sigma)
std::pair<DailySeries, SynthTruth> generate_synthetic(const SynthConfig& config);

/// Expands daily values to 24 identical hourly observations per day (UTC),
/// for feeding the generator's output through the CSV ingest path.
std::vector<Observation> expand_to_hourly(const DailySeries& daily);

} // namespace airgam
