#include "airgam/gam.hpp"

#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace airgam {

namespace {

constexpr double kSigmaFloor = 1e-300;

/// Internal fitting workspace: block layout, cached cross-products, and the
/// constraint transform per smooth.
struct Assembly {
    struct SmoothBlock {
        std::string name;
        BSplineBasis basis;
        Eigen::MatrixXd transform;      // K x (K-1), orthonormal basis of the centering null space
        Eigen::MatrixXd penalty;        // (K-1) x (K-1), Z' D2'D2 Z
        Eigen::RowVectorXd column_means;
        int offset = 0;
        int width = 0;
    };
    struct CategoricalBlock {
        std::string name;
        std::vector<std::string> levels;    // reference first
        int offset = 0;
        int width = 0;                      // levels - 1
    };

    int n = 0;
    int p = 0;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<SmoothBlock> smooths;
    std::vector<CategoricalBlock> categoricals;

    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0.0;
};

struct PenalizedSolution {
    Eigen::VectorXd beta;       // constrained coordinates, intercept first
    double rss = 0.0;
    double total_edf = 0.0;
    std::vector<double> block_edf; // one entry per block: intercept, smooths..., categoricals...
    bool ok = false;
};

/// Orthonormal basis of {v : c v = 0} via the QR factorization of c'.
Eigen::MatrixXd centering_transform(const Eigen::RowVectorXd& column_means) {
    const int k = static_cast<int>(column_means.size());
    Eigen::MatrixXd ct = column_means.transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ct);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(k - 1);
}

Assembly assemble(const DesignMatrix& design, const FitConfig& config) {
    Assembly a;
    a.n = design.n_rows();
    if (a.n < 1) throw TooFewRows("empty design");
    for (int i = 0; i < a.n; ++i)
        if (!std::isfinite(design.response(i)))
            throw TooFewRows("non-finite response in design row " + std::to_string(i));

    const int n_terms = static_cast<int>(design.columns.size());
    if (a.n < 10 * (1 + n_terms))
        throw TooFewRows("need at least " + std::to_string(10 * (1 + n_terms)) +
                         " rows for " + std::to_string(n_terms) + " terms, got " +
                         std::to_string(a.n));

    a.y = design.response;

    // layout pass
    int p = 1;
    std::vector<int> widths(design.columns.size());
    std::vector<BSplineBasis> bases;
    std::vector<std::vector<std::string>> level_sets(design.columns.size());
    for (std::size_t c = 0; c < design.columns.size(); ++c) {
        const DesignColumn& col = design.columns[c];
        if (col.kind == FeatureKind::Smooth) {
            bases.push_back(BSplineBasis::from_quantiles(
                std::span<const double>(col.values.data(), col.values.size()),
                config.basis_size));
            widths[c] = bases.back().size() - 1;
        } else {
            // keep calendar order, trim to the levels seen in training
            std::vector<bool> seen(col.levels.size(), false);
            for (int i = 0; i < a.n; ++i) seen[static_cast<int>(col.values(i))] = true;
            for (std::size_t l = 0; l < col.levels.size(); ++l)
                if (seen[l]) level_sets[c].push_back(col.levels[l]);
            if (level_sets[c].size() < 2)
                throw RankDeficient("categorical '" + col.name + "' has a single level");
            widths[c] = static_cast<int>(level_sets[c].size()) - 1;
        }
        p += widths[c];
    }
    a.p = p;
    a.x.setZero(a.n, p);
    a.x.col(0).setOnes();

    int offset = 1;
    std::size_t basis_idx = 0;
    for (std::size_t c = 0; c < design.columns.size(); ++c) {
        const DesignColumn& col = design.columns[c];
        if (col.kind == FeatureKind::Smooth) {
            Assembly::SmoothBlock block{.name = col.name,
                                        .basis = bases[basis_idx++],
                                        .transform = {},
                                        .penalty = {},
                                        .column_means = {},
                                        .offset = offset,
                                        .width = widths[c]};
            Eigen::MatrixXd b = block.basis.evaluate_matrix(
                std::span<const double>(col.values.data(), col.values.size()));
            block.column_means = b.colwise().mean();
            block.transform = centering_transform(block.column_means);
            Eigen::MatrixXd raw_penalty = second_difference_penalty(block.basis);
            block.penalty = block.transform.transpose() * raw_penalty * block.transform;
            a.x.block(0, offset, a.n, block.width) = b * block.transform;
            a.smooths.push_back(std::move(block));
        } else {
            Assembly::CategoricalBlock block{.name = col.name,
                                             .levels = level_sets[c],
                                             .offset = offset,
                                             .width = widths[c]};
            // label -> position in the trimmed level list
            for (int i = 0; i < a.n; ++i) {
                const std::string& label = col.levels[static_cast<int>(col.values(i))];
                auto it = std::find(block.levels.begin(), block.levels.end(), label);
                int pos = static_cast<int>(it - block.levels.begin());
                if (pos > 0) a.x(i, offset + pos - 1) = 1.0;
            }
            a.categoricals.push_back(std::move(block));
        }
        offset += widths[c];
    }

    a.xtx = a.x.transpose() * a.x;
    a.xty = a.x.transpose() * a.y;
    a.yty = a.y.squaredNorm();
    return a;
}

PenalizedSolution solve_penalized(const Assembly& a, const std::vector<double>& lambdas,
                                  double ridge) {
    PenalizedSolution sol;
    Eigen::MatrixXd m = a.xtx;
    m.diagonal().array() += ridge;
    for (std::size_t j = 0; j < a.smooths.size(); ++j) {
        const auto& block = a.smooths[j];
        m.block(block.offset, block.offset, block.width, block.width) +=
            lambdas[j] * block.penalty;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success) return sol;

    sol.beta = ldlt.solve(a.xty);
    if (!sol.beta.allFinite()) return sol;

    sol.rss = a.yty - 2.0 * sol.beta.dot(a.xty) + sol.beta.dot(a.xtx * sol.beta);
    if (sol.rss < 0.0) sol.rss = 0.0;

    // edf by block: diagonal sums of F = M^{-1} X'X
    Eigen::MatrixXd f = ldlt.solve(a.xtx);
    sol.block_edf.push_back(f(0, 0));
    for (const auto& block : a.smooths)
        sol.block_edf.push_back(f.diagonal().segment(block.offset, block.width).sum());
    for (const auto& block : a.categoricals)
        sol.block_edf.push_back(f.diagonal().segment(block.offset, block.width).sum());
    sol.total_edf = f.diagonal().sum();
    sol.ok = std::isfinite(sol.total_edf) && std::isfinite(sol.rss);
    return sol;
}

double gcv_of(const PenalizedSolution& sol, int n) {
    double denom = n - sol.total_edf;
    if (!sol.ok || denom < 1.0) return std::numeric_limits<double>::infinity();
    return n * sol.rss / (denom * denom);
}

/// Cyclic per-term descent of GCV over the fixed grid. Returns the chosen
/// lambda per smooth; `converged` reports whether a sweep reached a fixed
/// point before the cycle budget ran out.
std::vector<double> select_lambdas(const Assembly& a, const FitConfig& config,
                                   bool& converged) {
    const std::vector<double>& grid = config.grid();
    std::vector<double> lambdas(a.smooths.size());
    if (a.smooths.empty()) {
        converged = true;
        return lambdas;
    }
    // start at the grid point nearest 1.0 in log space
    double init = grid[0];
    for (double g : grid)
        if (std::abs(std::log(g)) < std::abs(std::log(init))) init = g;
    std::fill(lambdas.begin(), lambdas.end(), init);
    if (grid.size() == 1) {
        converged = true;
        return lambdas;
    }

    converged = false;
    for (int cycle = 0; cycle < config.lambda_cycles; ++cycle) {
        bool changed = false;
        for (std::size_t j = 0; j < a.smooths.size(); ++j) {
            double best_lambda = lambdas[j];
            double best_score = std::numeric_limits<double>::infinity();
            for (double g : grid) {
                std::vector<double> trial = lambdas;
                trial[j] = g;
                double score = gcv_of(solve_penalized(a, trial, config.ridge_floor), a.n);
                if (score < best_score) {
                    best_score = score;
                    best_lambda = g;
                }
            }
            if (best_lambda != lambdas[j]) {
                lambdas[j] = best_lambda;
                changed = true;
            }
        }
        if (!changed) {
            converged = true;
            break;
        }
    }
    return lambdas;
}

/// Shared per-row evaluation path; fit() stores fitted values computed through
/// this exact routine so predictions on training data match bit for bit.
double linear_predictor_row(const GamModel& model, const DesignMatrix& features,
                            const std::vector<int>& smooth_cols,
                            const std::vector<int>& cat_cols,
                            const std::vector<std::vector<int>>& level_maps, int row,
                            Eigen::RowVectorXd& scratch, int& clamped) {
    double eta = model.intercept;
    for (std::size_t j = 0; j < model.smooths.size(); ++j) {
        const SmoothTerm& term = model.smooths[j];
        const DesignColumn& col = features.columns[smooth_cols[j]];
        BSplineBasis basis = term.basis();
        scratch.resize(basis.size());
        if (basis.evaluate(col.values(row), scratch)) clamped++;
        eta += scratch.head(basis.size()).dot(term.coefficients);
    }
    for (std::size_t j = 0; j < model.categoricals.size(); ++j) {
        const CategoricalTerm& term = model.categoricals[j];
        const DesignColumn& col = features.columns[cat_cols[j]];
        int design_level = static_cast<int>(col.values(row));
        int model_level = level_maps[j][design_level];
        if (model_level < 0)
            throw UnseenLevel("level '" + col.levels[design_level] + "' of '" + term.feature +
                              "' was not seen in training");
        eta += term.coefficients(model_level);
    }
    return eta;
}

struct PredictPlan {
    std::vector<int> smooth_cols;
    std::vector<int> cat_cols;
    std::vector<std::vector<int>> level_maps;
};

PredictPlan plan_predict(const GamModel& model, const DesignMatrix& features) {
    PredictPlan plan;
    auto locate = [&](const std::string& name, FeatureKind kind) {
        for (std::size_t c = 0; c < features.columns.size(); ++c)
            if (features.columns[c].name == name && features.columns[c].kind == kind)
                return static_cast<int>(c);
        throw MissingFeature("prediction rows lack feature '" + name + "'");
    };
    for (const SmoothTerm& term : model.smooths)
        plan.smooth_cols.push_back(locate(term.feature, FeatureKind::Smooth));
    for (const CategoricalTerm& term : model.categoricals) {
        int c = locate(term.feature, FeatureKind::Categorical);
        plan.cat_cols.push_back(c);
        const DesignColumn& col = features.columns[c];
        std::vector<int> level_map(col.levels.size(), -1);
        for (std::size_t l = 0; l < col.levels.size(); ++l) {
            auto idx = term.level_index(col.levels[l]);
            if (idx) level_map[l] = *idx;
        }
        plan.level_maps.push_back(std::move(level_map));
    }
    return plan;
}

} // namespace

const char* aic_mode_name(AicMode mode) {
    return mode == AicMode::Standard ? "standard" : "paper_literal";
}

std::optional<AicMode> aic_mode_from_name(const std::string& name) {
    if (name == "standard") return AicMode::Standard;
    if (name == "paper_literal") return AicMode::PaperLiteral;
    return std::nullopt;
}

std::vector<double> FitConfig::default_lambda_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i) grid.push_back(std::pow(10.0, -4.0 + 8.0 * i / 12.0));
    return grid;
}

const std::vector<double>& FitConfig::grid() const {
    static const std::vector<double> fallback = default_lambda_grid();
    return lambda_grid.empty() ? fallback : lambda_grid;
}

std::optional<int> CategoricalTerm::level_index(const std::string& label) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == label) return static_cast<int>(i);
    return std::nullopt;
}

bool GamModel::has_term(const std::string& feature) const {
    for (const SmoothTerm& s : smooths)
        if (s.feature == feature) return true;
    for (const CategoricalTerm& c : categoricals)
        if (c.feature == feature) return true;
    return false;
}

std::vector<std::string> GamModel::term_names() const {
    std::vector<std::string> names;
    for (const SmoothTerm& s : smooths) names.push_back(s.feature);
    for (const CategoricalTerm& c : categoricals) names.push_back(c.feature);
    return names;
}

double gaussian_log_likelihood(double rss, int n, double sigma2) {
    double s2 = std::max(sigma2, kSigmaFloor);
    return -0.5 * n * std::log(2.0 * std::numbers::pi * s2) - rss / (2.0 * s2);
}

double aic_value(double total_edf, double log_likelihood, AicMode mode) {
    double k = total_edf + 1.0;
    return mode == AicMode::Standard ? 2.0 * k - 2.0 * log_likelihood
                                     : 2.0 * k - log_likelihood;
}

double aic(const GamModel& model, AicMode mode) {
    return aic_value(model.total_edf, model.log_likelihood, mode);
}

GamModel fit_gam(const DesignMatrix& design, const FitConfig& config) {
    Assembly a = assemble(design, config);

    bool converged = true;
    std::vector<double> lambdas = select_lambdas(a, config, converged);
    PenalizedSolution sol = solve_penalized(a, lambdas, config.ridge_floor);
    if (!sol.ok) throw RankDeficient("penalized normal equations are singular");
    if (a.n - sol.total_edf < 1.0)
        throw RankDeficient("effective degrees of freedom exhaust the sample");

    GamModel model;
    model.intercept = sol.beta(0);
    model.aic_mode = config.aic_mode;
    model.n_train = a.n;
    model.fit_info.lambda_grid = config.grid();
    model.fit_info.lambda_cycles = config.lambda_cycles;
    model.fit_info.lambda_search_converged = converged;

    std::size_t block = 1;
    for (std::size_t j = 0; j < a.smooths.size(); ++j, ++block) {
        const auto& ab = a.smooths[j];
        SmoothTerm term;
        term.feature = ab.name;
        term.boundary_lo = ab.basis.lower();
        term.boundary_hi = ab.basis.upper();
        term.interior_knots = ab.basis.interior_knots();
        term.degree = ab.basis.degree();
        term.coefficients = ab.transform * sol.beta.segment(ab.offset, ab.width);
        term.lambda = lambdas[j];
        term.edf = sol.block_edf[block];

        // the transform enforces the constraint; verify we stayed within tolerance
        double term_mean = ab.column_means.dot(term.coefficients);
        if (std::abs(term_mean) > config.centering_tolerance)
            throw RankDeficient("centering constraint violated for '" + ab.name + "'");
        model.smooths.push_back(std::move(term));
    }
    for (std::size_t j = 0; j < a.categoricals.size(); ++j, ++block) {
        const auto& ab = a.categoricals[j];
        CategoricalTerm term;
        term.feature = ab.name;
        term.levels = ab.levels;
        term.coefficients.setZero(static_cast<int>(ab.levels.size()));
        term.coefficients.tail(ab.width) = sol.beta.segment(ab.offset, ab.width);
        term.edf = sol.block_edf[block];
        model.categoricals.push_back(std::move(term));
    }
    model.total_edf = sol.total_edf;

    // fitted values through the shared prediction path (bit-identical to predict)
    PredictPlan plan = plan_predict(model, design);
    model.fitted_values.resize(a.n);
    Eigen::RowVectorXd scratch;
    int clamped = 0;
    for (int i = 0; i < a.n; ++i)
        model.fitted_values(i) = linear_predictor_row(model, design, plan.smooth_cols,
                                                      plan.cat_cols, plan.level_maps, i,
                                                      scratch, clamped);

    double rss = (a.y - model.fitted_values).squaredNorm();
    model.sigma2 = rss / (a.n - model.total_edf);
    model.log_likelihood = gaussian_log_likelihood(rss, a.n, model.sigma2);
    model.aic = aic_value(model.total_edf, model.log_likelihood, config.aic_mode);
    return model;
}

Prediction predict(const GamModel& model, const DesignMatrix& features) {
    PredictPlan plan = plan_predict(model, features);
    Prediction out;
    const int n = features.n_rows();
    out.ln_scale.resize(n);
    out.concentration.resize(n);
    Eigen::RowVectorXd scratch;
    for (int i = 0; i < n; ++i) {
        out.ln_scale(i) = linear_predictor_row(model, features, plan.smooth_cols,
                                               plan.cat_cols, plan.level_maps, i, scratch,
                                               out.clamped);
        out.concentration(i) = std::exp(out.ln_scale(i));
    }
    return out;
}

double gcv_score(const DesignMatrix& design, const std::vector<double>& lambdas,
                 const FitConfig& config) {
    Assembly a = assemble(design, config);
    if (lambdas.size() != a.smooths.size())
        throw ConfigError("gcv_score needs one lambda per smooth column");
    PenalizedSolution sol = solve_penalized(a, lambdas, config.ridge_floor);
    if (!sol.ok) throw RankDeficient("penalized normal equations are singular");
    if (a.n - sol.total_edf < 1.0)
        throw RankDeficient("effective degrees of freedom exhaust the sample");
    return gcv_of(sol, a.n);
}

} // namespace airgam
