#pragma once

#include "airgam/features.hpp"
#include "airgam/gam.hpp"
#include "airgam/selection.hpp"

#include <optional>
#include <string>
#include <vector>

namespace airgam {

struct TransferProvenance {
    std::string source_model_hash; // content hash of the source bundle JSON
    DateRange ld_period;
    std::vector<std::string> refit; // e.g. {"intercept", "d"}
};

/// Everything needed to reload a station model and predict new periods:
/// the fitted GAM plus the feature transform it was trained with.
struct ModelBundle {
    int format_version = 1;
    std::string station_id;
    Field target = Field::No2;
    DateRange train_period;
    GamModel model;
    FeaturePipeline pipeline;
    std::optional<TransferProvenance> transfer;
};

struct StationFitOptions {
    Field target = Field::No2;
    std::vector<FeatureSpec> specs; // candidate pool, or the fixed feature list
    bool run_selection = true;
    SelectionConfig selection;
    FitConfig fit;
};

struct StationFitResult {
    ModelBundle bundle;
    std::optional<SelectionTrace> trace;
};

/// The fit stage for one station: slice the train window, fit the PCA
/// transform when used, run forward selection (or fit the fixed specs), add
/// the mandatory weekday term, and package the result.
StationFitResult fit_station_model(const DailySeries& data, DateRange train_period,
                                   const StationFitOptions& options);

} // namespace airgam
