#include "airgam/transfer.hpp"

#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>

namespace airgam {

std::vector<std::string> TransferConfig::refit_names() const {
    std::vector<std::string> names;
    if (refit_intercept) names.push_back("intercept");
    if (refit_weekday) names.push_back(weekday_feature);
    return names;
}

void TransferConfig::validate() const {
    if (!refit_intercept && !refit_weekday)
        throw ConfigError("transfer refit set must not be empty");
}

GamModel transfer_fit(const GamModel& pre_ld, const DesignMatrix& ld_design,
                      const TransferConfig& config) {
    config.validate();
    const int n = ld_design.n_rows();
    if (n < 14)
        throw InsufficientCoverage("lockdown refit needs at least 14 rows, got " +
                                   std::to_string(n));

    // weekday column with every level seen at least twice
    const DesignColumn* weekday = nullptr;
    if (config.refit_weekday) {
        weekday = ld_design.find_column(config.weekday_feature);
        if (!weekday || weekday->kind != FeatureKind::Categorical)
            throw MissingFeature("lockdown design lacks categorical column '" +
                                 config.weekday_feature + "'");
        std::vector<int> counts(weekday->levels.size(), 0);
        for (int i = 0; i < n; ++i) counts[static_cast<int>(weekday->values(i))]++;
        for (std::size_t l = 0; l < counts.size(); ++l)
            if (counts[l] < 2)
                throw InsufficientCoverage("weekday level '" + weekday->levels[l] +
                                           "' appears fewer than twice in the lockdown window");
    }

    // frozen terms = everything except the refit set
    GamModel frozen = pre_ld;
    if (config.refit_intercept) frozen.intercept = 0.0;
    if (config.refit_weekday) {
        frozen.categoricals.erase(
            std::remove_if(frozen.categoricals.begin(), frozen.categoricals.end(),
                           [&](const CategoricalTerm& t) {
                               return t.feature == config.weekday_feature;
                           }),
            frozen.categoricals.end());
    }
    Prediction offsets = predict(frozen, ld_design); // throws MissingFeature if a frozen input is absent

    Eigen::VectorXd z = ld_design.response - offsets.ln_scale;

    const int n_dummies = config.refit_weekday
                              ? static_cast<int>(weekday->levels.size()) - 1
                              : 0;
    const int intercept_cols = config.refit_intercept ? 1 : 0;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, intercept_cols + n_dummies);
    if (config.refit_intercept) x.col(0).setOnes();
    for (int i = 0; i < n && n_dummies > 0; ++i) {
        int level = static_cast<int>(weekday->values(i));
        if (level > 0) x(i, intercept_cols + level - 1) = 1.0;
    }
    Eigen::VectorXd beta = x.colPivHouseholderQr().solve(z);

    GamModel out = pre_ld;
    double refit_edf = 0.0;
    if (config.refit_intercept) {
        out.intercept = beta(0);
        refit_edf += 1.0;
    }
    if (config.refit_weekday) {
        CategoricalTerm term;
        term.feature = config.weekday_feature;
        term.levels = weekday->levels;
        term.coefficients.setZero(static_cast<int>(weekday->levels.size()));
        term.coefficients.tail(n_dummies) = beta.tail(n_dummies);
        term.edf = static_cast<double>(n_dummies);

        bool replaced = false;
        for (CategoricalTerm& existing : out.categoricals) {
            if (existing.feature == config.weekday_feature) {
                existing = term;
                replaced = true;
                break;
            }
        }
        if (!replaced) out.categoricals.push_back(std::move(term));
        refit_edf += n_dummies;
    }

    // frozen terms consumed no lockdown degrees of freedom
    for (SmoothTerm& s : out.smooths) s.edf = 0.0;
    for (CategoricalTerm& c : out.categoricals)
        if (!(config.refit_weekday && c.feature == config.weekday_feature)) c.edf = 0.0;

    Prediction fitted = predict(out, ld_design);
    out.fitted_values = fitted.ln_scale;
    double rss = (ld_design.response - fitted.ln_scale).squaredNorm();
    out.n_train = n;
    out.total_edf = refit_edf;
    if (n - refit_edf < 1.0) throw InsufficientCoverage("too few rows for the refit parameters");
    out.sigma2 = rss / (n - refit_edf);
    out.log_likelihood = gaussian_log_likelihood(rss, n, out.sigma2);
    out.aic = aic_value(out.total_edf, out.log_likelihood, out.aic_mode);
    return out;
}

CvReport ld_validate(const GamModel& pre_ld, const DailySeries& ld_data,
                     const FeaturePipeline& pipeline, DateRange ld_period,
                     const TransferConfig& config, int test_block_days) {
    FoldPlan plan = make_ld_folds(ld_period, test_block_days);
    FoldFitter fitter = [&pre_ld, &pipeline, &config](const DailySeries& train) {
        FoldModel out;
        out.pipeline = pipeline; // the transfer freezes the feature transform too
        DesignMatrix design = build_design(train, pipeline);
        out.model = transfer_fit(pre_ld, design, config);
        return out;
    };
    return cross_validate(ld_data, plan, fitter, "ld");
}

} // namespace airgam
