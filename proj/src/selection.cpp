#include "airgam/selection.hpp"

#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace airgam {

double vif(const Eigen::VectorXd& candidate, const std::vector<Eigen::VectorXd>& included) {
    const int n = static_cast<int>(candidate.size());
    double mean = candidate.mean();
    double tss = (candidate.array() - mean).matrix().squaredNorm();
    if (tss <= 0.0) throw DegenerateCandidate("candidate column has zero variance");
    if (included.empty()) return 1.0;

    const int p = static_cast<int>(included.size()) + 1;
    if (n < p + 1)
        throw InsufficientData("vif regression needs more rows than regressors");
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    for (std::size_t j = 0; j < included.size(); ++j) {
        if (included[j].size() != n)
            throw LengthMismatch("included column length differs from candidate");
        x.col(static_cast<int>(j) + 1) = included[j];
    }
    Eigen::VectorXd beta = x.colPivHouseholderQr().solve(candidate);
    double rss = (candidate - x * beta).squaredNorm();
    double r2 = 1.0 - rss / tss;
    if (r2 >= 1.0 - 1e-12) return std::numeric_limits<double>::infinity();
    return 1.0 / (1.0 - r2);
}

namespace {

std::vector<Eigen::VectorXd> included_continuous_columns(const DesignMatrix& pool,
                                                         const std::vector<std::string>& names) {
    std::vector<Eigen::VectorXd> cols;
    for (const std::string& name : names) {
        const DesignColumn* c = pool.find_column(name);
        if (c && c->kind == FeatureKind::Smooth) cols.push_back(c->values);
    }
    return cols;
}

} // namespace

std::pair<GamModel, SelectionTrace> forward_select(const DesignMatrix& pool,
                                                   const SelectionConfig& config) {
    if (pool.columns.empty()) throw NoViableModel("empty candidate pool");

    SelectionTrace trace;
    std::vector<std::string> included;
    std::optional<GamModel> current;
    double current_aic = std::numeric_limits<double>::infinity();

    while (true) {
        SelectionStep step;
        std::optional<std::size_t> best; // index into step.candidates
        std::vector<GamModel> fitted(pool.columns.size());

        std::vector<Eigen::VectorXd> vif_base = included_continuous_columns(pool, included);

        for (const DesignColumn& col : pool.columns) {
            if (std::find(included.begin(), included.end(), col.name) != included.end())
                continue;
            CandidateRecord rec;
            rec.name = col.name;

            if (col.kind == FeatureKind::Smooth) {
                try {
                    rec.vif = vif(col.values, vif_base);
                } catch (const Error& e) {
                    rec.status = CandidateStatus::FitFailed;
                    rec.note = e.what();
                    step.candidates.push_back(std::move(rec));
                    continue;
                }
                if (*rec.vif > config.vif_threshold) {
                    rec.status = CandidateStatus::VifRejected;
                    step.candidates.push_back(std::move(rec));
                    continue;
                }
            }

            std::vector<std::string> names = included;
            names.push_back(col.name);
            try {
                GamModel model = fit_gam(pool.subset_columns(names), config.fit);
                rec.aic = model.aic;
                rec.status = CandidateStatus::Fitted;
                std::size_t idx = step.candidates.size();
                fitted[idx] = std::move(model);
                if (!best || *rec.aic < *step.candidates[*best].aic - config.aic_tie_tolerance)
                    best = idx;
            } catch (const Error& e) {
                rec.status = CandidateStatus::FitFailed;
                rec.note = e.what();
            }
            step.candidates.push_back(std::move(rec));
        }

        const bool first_step = trace.steps.empty();
        if (!best) {
            if (first_step) throw NoViableModel("every single-variable fit failed");
            step.chosen = std::nullopt;
            step.stop_reason = step.candidates.empty() ? "candidate pool exhausted"
                                                       : "no fittable candidate remains";
            step.aic_after = current_aic;
            trace.steps.push_back(std::move(step));
            break;
        }

        double best_aic = *step.candidates[*best].aic;
        if (!first_step && best_aic >= current_aic - config.aic_tie_tolerance) {
            step.chosen = std::nullopt;
            step.stop_reason = "no candidate lowers AIC";
            step.aic_after = current_aic;
            trace.steps.push_back(std::move(step));
            break;
        }

        const std::string chosen_name = step.candidates[*best].name;
        included.push_back(chosen_name);
        current = std::move(fitted[*best]);
        current_aic = best_aic;
        step.chosen = chosen_name;
        step.aic_after = best_aic;
        trace.steps.push_back(std::move(step));

        if (included.size() == pool.columns.size()) {
            SelectionStep stop;
            stop.chosen = std::nullopt;
            stop.stop_reason = "candidate pool exhausted";
            stop.aic_after = current_aic;
            trace.steps.push_back(std::move(stop));
            break;
        }
    }

    trace.selected_order = included;
    trace.final_aic = current_aic;
    return {std::move(*current), std::move(trace)};
}

GamModel ensure_weekday(const GamModel& model, const DesignMatrix& pool,
                        const FitConfig& config, const std::string& weekday_column) {
    if (model.has_term(weekday_column)) return model;
    const DesignColumn* col = pool.find_column(weekday_column);
    if (!col || col->kind != FeatureKind::Categorical)
        throw MissingFeature("pool has no categorical column '" + weekday_column + "'");
    std::vector<std::string> names = model.term_names();
    names.push_back(weekday_column);
    return fit_gam(pool.subset_columns(names), config);
}

} // namespace airgam
