#pragma once

#include "airgam/dates.hpp"
#include "airgam/ingest.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace airgam {

/// Base variables a feature can be derived from. Wdx/Wdy are the cartesian
/// wind-direction components, Pca the first principal component of
/// (P, RH, DP, T), Dy the day of the year, Month/Weekday the calendar levels.
enum class FeatureSource : int {
    Ws,
    Wdx,
    Wdy,
    T,
    Rh,
    Dp,
    P,
    Pca,
    Dy,
    Month,
    Weekday,
};

enum class FeatureKind { Smooth, Categorical };

struct FeatureSpec {
    std::string name; // canonical, e.g. "ws_lag2", "pca_roll7", "wdx", "m", "d"
    FeatureKind kind = FeatureKind::Smooth;
    FeatureSource source = FeatureSource::Ws;
    int lag_days = 0;             // 0..3
    int rolling_window_days = 0;  // 0 (none), 7 or 14; only Ws and Pca

    bool is_continuous() const { return kind == FeatureKind::Smooth; }
};

const char* feature_source_name(FeatureSource s);
std::optional<FeatureSource> feature_source_from_name(const std::string& name);
std::string canonical_feature_name(FeatureSource source, int lag_days, int rolling_window_days);

/// Builds a validated spec (kind inferred from the source, canonical name).
FeatureSpec make_feature_spec(FeatureSource source, int lag_days = 0,
                              int rolling_window_days = 0);

/// The paper's full candidate pool: every continuous base variable at lags
/// 0..3, rolling means of WS and PCA over 7 and 14 days, plus DY, M and D.
std::vector<FeatureSpec> default_candidate_specs();

/// First principal component of (P, RH, DP, T) on the correlation scale.
struct PcaModel {
    Eigen::Vector4d means;
    Eigen::Vector4d scales;  // training standard deviations (n-1 convention)
    Eigen::Vector4d loading; // unit vector; T entry sign-fixed >= 0
    double explained_variance_ratio = 0.0;

    static constexpr std::array<Field, 4> inputs() {
        return {Field::P, Field::Rh, Field::Dp, Field::T};
    }
};

/// wdx = sin(2*pi*wd/360), wdy = cos(2*pi*wd/360)
std::pair<double, double> wind_to_cartesian(double wd_degrees);

/// Fits the PCA model on complete (P, RH, DP, T) rows.
/// Throws InsufficientData (< 5 rows) or DegenerateColumn (zero variance).
PcaModel fit_pca(const std::vector<Eigen::Vector4d>& rows);

/// Convenience overload pulling complete rows out of a daily series.
PcaModel fit_pca(const DailySeries& daily);

double apply_pca(const PcaModel& model, const Eigen::Vector4d& row);

/// Per-date optional values aligned with a date vector.
struct DatedSeries {
    std::vector<Date> dates;
    std::vector<std::optional<double>> values;
};

/// value(d) = input(d - k); series treated as date-indexed, gaps respected.
DatedSeries lag(const DatedSeries& series, int k_days);

/// Trailing mean over [d - window + 1, d] of the present values; missing when
/// fewer than window/2 values are present.
DatedSeries rolling_mean(const DatedSeries& series, int window_days);

struct DesignColumn {
    std::string name;
    FeatureKind kind = FeatureKind::Smooth;
    Eigen::VectorXd values;              // continuous values, or level indices
    std::vector<std::string> levels;     // categorical level labels (index -> label)
};

/// Fully populated model matrix rows for one station. `response` is
/// ln(target); `target_values` keeps the raw concentrations for scoring.
struct DesignMatrix {
    std::string station_id;
    std::string target;
    std::vector<Date> dates;
    Eigen::VectorXd response;
    Eigen::VectorXd target_values;
    std::vector<DesignColumn> columns;
    std::map<std::string, int> dropped_rows; // reason -> count

    int n_rows() const { return static_cast<int>(dates.size()); }
    const DesignColumn* find_column(const std::string& name) const;
    DesignMatrix subset_columns(const std::vector<std::string>& names) const;
    int total_dropped() const;
};

/// Feature configuration that must travel with a fitted model so later
/// periods can be projected through the identical transform.
struct FeaturePipeline {
    Field target = Field::No2;
    std::vector<FeatureSpec> specs;
    std::optional<PcaModel> pca; // required iff any spec draws on Pca

    bool uses_pca() const;
};

/// Assembles the design matrix: response = ln(target); rows with a
/// nonpositive/missing target or any missing feature are dropped and counted.
/// Throws EmptyDesign when nothing is left.
DesignMatrix build_design(const DailySeries& daily, const FeaturePipeline& pipeline);

/// Same, but rows without a usable response are kept (response/target set to
/// NaN) so models can predict days that lack measurements.
DesignMatrix build_feature_rows(const DailySeries& daily, const FeaturePipeline& pipeline);

/// Debug serialization: date, response and one column per feature.
void write_design_csv(std::ostream& out, const DesignMatrix& design);

std::vector<std::string> month_level_labels();   // "m01".."m12"
std::vector<std::string> weekday_level_labels(); // "mon".."sun"

} // namespace airgam
