#pragma once

#include "airgam/bspline.hpp"
#include "airgam/features.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace airgam {

/// Eq. given in the docs as AIC = 2k - 2 ln L is the Standard mode; the
/// PaperLiteral mode drops the factor of two on the likelihood term.
enum class AicMode { Standard, PaperLiteral };

const char* aic_mode_name(AicMode mode);
std::optional<AicMode> aic_mode_from_name(const std::string& name);

struct FitConfig {
    int basis_size = 10;              // K per smooth (auto-reduced on ties)
    std::vector<double> lambda_grid;  // empty -> default_lambda_grid()
    int lambda_cycles = 3;            // outer sweeps of the per-term GCV descent
    AicMode aic_mode = AicMode::Standard;
    double centering_tolerance = 1e-8;
    double ridge_floor = 1e-10;

    static std::vector<double> default_lambda_grid(); // 1e-4..1e4, 13 log-spaced
    const std::vector<double>& grid() const;
};

/// One penalized B-spline smooth. Coefficients live in the original basis and
/// satisfy the sum-to-zero centering constraint over the training rows.
struct SmoothTerm {
    std::string feature;
    double boundary_lo = 0.0;
    double boundary_hi = 1.0;
    std::vector<double> interior_knots;
    int degree = 3;
    int penalty_order = 2;
    Eigen::VectorXd coefficients;
    double lambda = 1.0;
    double edf = 0.0;

    int basis_size() const { return static_cast<int>(coefficients.size()); }
    BSplineBasis basis() const { return BSplineBasis(boundary_lo, boundary_hi, interior_knots, degree); }
};

/// Dummy-coded categorical effect; levels[0] is the reference with
/// coefficient exactly 0.
struct CategoricalTerm {
    std::string feature;
    std::vector<std::string> levels;
    Eigen::VectorXd coefficients;
    double edf = 0.0;

    std::optional<int> level_index(const std::string& label) const;
};

struct FitInfo {
    std::vector<double> lambda_grid;
    int lambda_cycles = 0;
    bool lambda_search_converged = true;
};

struct GamModel {
    double intercept = 0.0;
    std::vector<SmoothTerm> smooths;
    std::vector<CategoricalTerm> categoricals;
    double sigma2 = 0.0;      // residual variance on the ln scale
    int n_train = 0;
    double total_edf = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    AicMode aic_mode = AicMode::Standard;
    FitInfo fit_info;

    /// Training linear predictor, kept in memory for diagnostics (not serialized).
    Eigen::VectorXd fitted_values;

    int n_terms() const { return static_cast<int>(smooths.size() + categoricals.size()); }
    bool has_term(const std::string& feature) const;
    std::vector<std::string> term_names() const;
};

/// Penalized least-squares fit of ln(Y) on the design's columns: one centered
/// P-spline block per continuous column, dummy coding per categorical column.
/// Smoothing weights are chosen per term by cyclic GCV descent over the grid.
GamModel fit_gam(const DesignMatrix& design, const FitConfig& config);

struct Prediction {
    Eigen::VectorXd ln_scale;      // linear predictor
    Eigen::VectorXd concentration; // exp(linear predictor), ug/m3
    int clamped = 0;               // smooth inputs outside the training range
};

/// Predicts rows of `features` (a design over any period). Throws
/// MissingFeature / UnseenLevel on contract violations.
Prediction predict(const GamModel& model, const DesignMatrix& features);

/// k = total_edf + 1 (the variance parameter counts as one).
double aic_value(double total_edf, double log_likelihood, AicMode mode);

/// Recomputes AIC from a model's stored fields under the requested mode.
double aic(const GamModel& model, AicMode mode);

/// GCV score n * RSS / (n - edf)^2 of the penalized fit at fixed lambdas
/// (one per continuous column, in column order).
double gcv_score(const DesignMatrix& design, const std::vector<double>& lambdas,
                 const FitConfig& config);

/// Gaussian log-likelihood of residuals with the given RSS at variance
/// sigma2 (floored away from zero to stay finite).
double gaussian_log_likelihood(double rss, int n, double sigma2);

} // namespace airgam
