#pragma once

#include "airgam/evaluation.hpp"
#include "airgam/features.hpp"
#include "airgam/gam.hpp"

#include <string>
#include <vector>

namespace airgam {

/// What the lockdown refit re-estimates; everything else (all smooths and any
/// frozen categorical such as Month) is carried over untouched.
struct TransferConfig {
    bool refit_intercept = true;
    bool refit_weekday = true;
    std::string weekday_feature = "d";

    std::vector<std::string> refit_names() const;
    void validate() const; // the refit set must be non-empty
};

/// Derives a lockdown model from a pre-lockdown model: computes the frozen
/// terms' contribution per lockdown row, then solves ordinary least squares
/// of (ln Y - frozen offset) on intercept + weekday dummies. Frozen term
/// parameters are copied bit for bit; sigma^2, likelihood and AIC are
/// recomputed on the lockdown rows (frozen terms consume no degrees of
/// freedom there, so their edf is reported as zero).
/// Preconditions: >= 14 rows and every weekday seen at least twice
/// (InsufficientCoverage otherwise; MissingFeature when a frozen feature or
/// the weekday column is absent from ld_design).
GamModel transfer_fit(const GamModel& pre_ld, const DesignMatrix& ld_design,
                      const TransferConfig& config);

/// Lockdown cross-validation: 3-day test blocks tile the period, the refit
/// runs on the complement, and per-fold RMSE is reported on the
/// concentration scale.
CvReport ld_validate(const GamModel& pre_ld, const DailySeries& ld_data,
                     const FeaturePipeline& pipeline, DateRange ld_period,
                     const TransferConfig& config, int test_block_days = 3);

} // namespace airgam
