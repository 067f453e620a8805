#pragma once

#include "airgam/gam.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace airgam {

struct SelectionConfig {
    double vif_threshold = 2.5; // paper default; 4, 5 and 10 are the cited alternatives
    double aic_tie_tolerance = 1e-9;
    FitConfig fit;
};

enum class CandidateStatus { Fitted, VifRejected, FitFailed };

struct CandidateRecord {
    std::string name;
    CandidateStatus status = CandidateStatus::Fitted;
    std::optional<double> vif; // continuous candidates only; +inf = perfect collinearity
    std::optional<double> aic; // present when the candidate model was fitted
    std::string note;          // fit failure reason
};

struct SelectionStep {
    std::vector<CandidateRecord> candidates;
    std::optional<std::string> chosen;  // nullopt: this is the Stop step
    std::string stop_reason;            // set on the Stop step
    double aic_after = 0.0;             // model AIC after this step
};

/// Full audit of one forward-selection run. The last step is always the
/// single Stop step; adopted steps carry strictly decreasing aic_after.
struct SelectionTrace {
    std::vector<SelectionStep> steps;
    std::vector<std::string> selected_order;
    double final_aic = 0.0;
};

/// Variance inflation factor of `candidate` against the included columns:
/// regress candidate on [1, included...]; return 1/(1 - R^2). An empty
/// included set gives exactly 1. R^2 >= 1 - 1e-12 returns +infinity.
double vif(const Eigen::VectorXd& candidate, const std::vector<Eigen::VectorXd>& included);

/// Forward selection over the pooled design: step one keeps the AIC-minimal
/// single-variable model; later steps VIF-filter continuous candidates
/// against the included continuous features (threshold from config), fit the
/// survivors and adopt the AIC-minimal one; stops when no candidate lowers
/// AIC. Ties break by pool column order. Failed candidate fits are recorded,
/// not fatal. Throws NoViableModel when every first-step fit fails.
std::pair<GamModel, SelectionTrace> forward_select(const DesignMatrix& pool,
                                                   const SelectionConfig& config);

/// Adds the weekday term to the selected feature set when absent (refit), or
/// returns the model unchanged.
GamModel ensure_weekday(const GamModel& model, const DesignMatrix& pool,
                        const FitConfig& config,
                        const std::string& weekday_column = "d");

} // namespace airgam
