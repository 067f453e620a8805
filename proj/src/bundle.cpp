#include "airgam/bundle.hpp"

#include "airgam/errors.hpp"

#include <algorithm>

namespace airgam {

StationFitResult fit_station_model(const DailySeries& data, DateRange train_period,
                                   const StationFitOptions& options) {
    if (options.specs.empty()) throw ConfigError("no candidate features configured");

    DailySeries train = slice_period(data, train_period.start, train_period.end);
    if (train.rows.empty())
        throw TooFewRows("no training rows in " + train_period.to_string() + " for station " +
                         data.station_id);

    FeaturePipeline full;
    full.target = options.target;
    full.specs = options.specs;
    if (full.uses_pca()) full.pca = fit_pca(train);
    DesignMatrix design = build_design(train, full);

    StationFitResult result;
    GamModel model;
    if (options.run_selection) {
        auto [selected, trace] = forward_select(design, options.selection);
        model = ensure_weekday(selected, design, options.selection.fit);
        result.trace = std::move(trace);
    } else {
        model = fit_gam(design, options.fit);
    }

    ModelBundle& bundle = result.bundle;
    bundle.station_id = data.station_id;
    bundle.target = options.target;
    bundle.train_period = train_period;
    bundle.pipeline.target = options.target;
    bundle.pipeline.pca = full.pca;
    for (const std::string& name : model.term_names()) {
        auto it = std::find_if(options.specs.begin(), options.specs.end(),
                               [&](const FeatureSpec& s) { return s.name == name; });
        if (it == options.specs.end())
            throw MissingFeature("selected term '" + name + "' missing from the spec pool");
        bundle.pipeline.specs.push_back(*it);
    }
    if (!bundle.pipeline.uses_pca()) bundle.pipeline.pca.reset();
    bundle.model = std::move(model);
    return result;
}

} // namespace airgam
