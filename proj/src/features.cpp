#include "airgam/features.hpp"

#include "airgam/csv.hpp"
#include "airgam/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace airgam {

namespace {

constexpr const char* kSourceNames[] = {"ws", "wdx", "wdy", "t",  "rh", "dp",
                                        "p",  "pca", "dy",  "m",  "d"};

bool source_is_categorical(FeatureSource s) {
    return s == FeatureSource::Month || s == FeatureSource::Weekday;
}

bool rolling_allowed(FeatureSource s) {
    return s == FeatureSource::Ws || s == FeatureSource::Pca;
}

std::unordered_map<std::int32_t, int> index_by_date(const std::vector<Date>& dates) {
    std::unordered_map<std::int32_t, int> idx;
    idx.reserve(dates.size());
    for (std::size_t i = 0; i < dates.size(); ++i) idx[dates[i].days] = static_cast<int>(i);
    return idx;
}

} // namespace

const char* feature_source_name(FeatureSource s) { return kSourceNames[static_cast<int>(s)]; }

std::optional<FeatureSource> feature_source_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(FeatureSource::Weekday); ++i)
        if (name == kSourceNames[i]) return static_cast<FeatureSource>(i);
    return std::nullopt;
}

std::string canonical_feature_name(FeatureSource source, int lag_days, int rolling_window_days) {
    std::string name = feature_source_name(source);
    if (rolling_window_days > 0) name += "_roll" + std::to_string(rolling_window_days);
    if (lag_days > 0) name += "_lag" + std::to_string(lag_days);
    return name;
}

FeatureSpec make_feature_spec(FeatureSource source, int lag_days, int rolling_window_days) {
    if (lag_days < 0 || lag_days > 3)
        throw ConfigError("lag_days must be in {0,1,2,3}");
    if (rolling_window_days != 0 && rolling_window_days != 7 && rolling_window_days != 14)
        throw ConfigError("rolling_window_days must be one of {0,7,14}");
    if (rolling_window_days > 0 && !rolling_allowed(source))
        throw ConfigError("rolling means are defined only for ws and pca");
    if (rolling_window_days > 0 && lag_days > 0)
        throw ConfigError("a feature is either lagged or rolled, not both");
    if (source_is_categorical(source) && (lag_days > 0 || rolling_window_days > 0))
        throw ConfigError("calendar variables take no lag or rolling window");
    FeatureSpec spec;
    spec.source = source;
    spec.lag_days = lag_days;
    spec.rolling_window_days = rolling_window_days;
    spec.kind = source_is_categorical(source) ? FeatureKind::Categorical : FeatureKind::Smooth;
    spec.name = canonical_feature_name(source, lag_days, rolling_window_days);
    return spec;
}

std::vector<FeatureSpec> default_candidate_specs() {
    // Fixed order; forward selection breaks AIC ties by this order.
    std::vector<FeatureSpec> specs;
    const FeatureSource continuous[] = {FeatureSource::Ws, FeatureSource::Wdx,
                                        FeatureSource::Wdy, FeatureSource::T,
                                        FeatureSource::Rh, FeatureSource::Dp,
                                        FeatureSource::P,  FeatureSource::Pca};
    for (int lag = 0; lag <= 3; ++lag)
        for (FeatureSource s : continuous) specs.push_back(make_feature_spec(s, lag));
    for (int w : {7, 14}) {
        specs.push_back(make_feature_spec(FeatureSource::Ws, 0, w));
        specs.push_back(make_feature_spec(FeatureSource::Pca, 0, w));
    }
    specs.push_back(make_feature_spec(FeatureSource::Dy));
    specs.push_back(make_feature_spec(FeatureSource::Month));
    specs.push_back(make_feature_spec(FeatureSource::Weekday));
    return specs;
}

std::pair<double, double> wind_to_cartesian(double wd_degrees) {
    double rad = wd_degrees / 360.0 * 2.0 * std::numbers::pi;
    return {std::sin(rad), std::cos(rad)};
}

PcaModel fit_pca(const std::vector<Eigen::Vector4d>& rows) {
    const int n = static_cast<int>(rows.size());
    if (n < 5) throw InsufficientData("pca needs at least 5 complete rows, got " +
                                      std::to_string(n));

    Eigen::MatrixXd x(n, 4);
    for (int i = 0; i < n; ++i) x.row(i) = rows[i].transpose();

    PcaModel model;
    model.means = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - model.means.transpose();
    for (int j = 0; j < 4; ++j) {
        double var = centered.col(j).squaredNorm() / (n - 1);
        if (var <= 0.0)
            throw DegenerateColumn(std::string("zero variance in pca input ") +
                                   field_name(PcaModel::inputs()[j]));
        model.scales(j) = std::sqrt(var);
    }
    Eigen::MatrixXd standardized = centered.array().rowwise() / model.scales.transpose().array();
    Eigen::Matrix4d corr = standardized.transpose() * standardized / (n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(corr);
    if (solver.info() != Eigen::Success) throw DegenerateColumn("pca eigensolver failed");
    // eigenvalues come out ascending
    model.loading = solver.eigenvectors().col(3);
    model.explained_variance_ratio = solver.eigenvalues()(3) / solver.eigenvalues().sum();

    // sign convention: temperature loading >= 0 (falls back to the first
    // non-negligible entry if the T loading vanishes)
    double anchor = model.loading(3);
    if (std::abs(anchor) < 1e-12) {
        for (int j = 0; j < 4; ++j) {
            if (std::abs(model.loading(j)) >= 1e-12) {
                anchor = model.loading(j);
                break;
            }
        }
    }
    if (anchor < 0.0) model.loading = -model.loading;
    return model;
}

PcaModel fit_pca(const DailySeries& daily) {
    std::vector<Eigen::Vector4d> rows;
    for (const DailyRow& r : daily.rows) {
        Eigen::Vector4d v;
        bool complete = true;
        for (int j = 0; j < 4; ++j) {
            auto val = r.get(PcaModel::inputs()[j]);
            if (!val) {
                complete = false;
                break;
            }
            v(j) = *val;
        }
        if (complete) rows.push_back(v);
    }
    return fit_pca(rows);
}

double apply_pca(const PcaModel& model, const Eigen::Vector4d& row) {
    return model.loading.dot(
        ((row - model.means).array() / model.scales.array()).matrix());
}

DatedSeries lag(const DatedSeries& series, int k_days) {
    if (k_days < 1 || k_days > 3) throw ConfigError("lag must be 1, 2 or 3 days");
    auto idx = index_by_date(series.dates);
    DatedSeries out;
    out.dates = series.dates;
    out.values.resize(series.dates.size());
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
        auto it = idx.find(series.dates[i].days - k_days);
        if (it != idx.end()) out.values[i] = series.values[it->second];
    }
    return out;
}

DatedSeries rolling_mean(const DatedSeries& series, int window_days) {
    if (window_days != 7 && window_days != 14)
        throw ConfigError("rolling window must be 7 or 14 days");
    auto idx = index_by_date(series.dates);
    DatedSeries out;
    out.dates = series.dates;
    out.values.resize(series.dates.size());
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
        double sum = 0.0;
        int count = 0;
        for (int back = 0; back < window_days; ++back) {
            auto it = idx.find(series.dates[i].days - back);
            if (it == idx.end()) continue;
            const auto& v = series.values[it->second];
            if (!v) continue;
            sum += *v;
            count++;
        }
        if (2 * count >= window_days) out.values[i] = sum / count;
    }
    return out;
}

bool FeaturePipeline::uses_pca() const {
    return std::any_of(specs.begin(), specs.end(),
                       [](const FeatureSpec& s) { return s.source == FeatureSource::Pca; });
}

namespace {

/// Continuous base series for one source over the daily dates.
DatedSeries base_series(const DailySeries& daily, FeatureSource source,
                        const std::optional<PcaModel>& pca) {
    DatedSeries out;
    out.dates.reserve(daily.rows.size());
    out.values.reserve(daily.rows.size());
    for (const DailyRow& r : daily.rows) {
        out.dates.push_back(r.date);
        std::optional<double> v;
        switch (source) {
            case FeatureSource::Ws: v = r.get(Field::Ws); break;
            case FeatureSource::T: v = r.get(Field::T); break;
            case FeatureSource::Rh: v = r.get(Field::Rh); break;
            case FeatureSource::Dp: v = r.get(Field::Dp); break;
            case FeatureSource::P: v = r.get(Field::P); break;
            case FeatureSource::Wdx:
            case FeatureSource::Wdy: {
                auto wd = r.get(Field::Wd);
                if (wd) {
                    auto [wdx, wdy] = wind_to_cartesian(*wd);
                    v = source == FeatureSource::Wdx ? wdx : wdy;
                }
                break;
            }
            case FeatureSource::Pca: {
                if (!pca) throw MissingFeature("pipeline uses pca but carries no PcaModel");
                Eigen::Vector4d row;
                bool complete = true;
                for (int j = 0; j < 4; ++j) {
                    auto val = r.get(PcaModel::inputs()[j]);
                    if (!val) {
                        complete = false;
                        break;
                    }
                    row(j) = *val;
                }
                if (complete) v = apply_pca(*pca, row);
                break;
            }
            case FeatureSource::Dy:
                v = static_cast<double>(r.date.day_of_year());
                break;
            default:
                throw ConfigError("calendar source has no continuous base series");
        }
        out.values.push_back(v);
    }
    return out;
}

DesignMatrix assemble(const DailySeries& daily, const FeaturePipeline& pipeline,
                      bool require_response) {
    DesignMatrix design;
    design.station_id = daily.station_id;
    design.target = field_name(pipeline.target);
    if (pipeline.specs.empty()) throw ConfigError("empty feature spec list");

    // realize every continuous feature as a per-date series
    std::vector<DatedSeries> continuous(pipeline.specs.size());
    for (std::size_t s = 0; s < pipeline.specs.size(); ++s) {
        const FeatureSpec& spec = pipeline.specs[s];
        if (spec.kind == FeatureKind::Categorical) continue;
        DatedSeries series = base_series(daily, spec.source, pipeline.pca);
        if (spec.rolling_window_days > 0) series = rolling_mean(series, spec.rolling_window_days);
        if (spec.lag_days > 0) series = lag(series, spec.lag_days);
        continuous[s] = std::move(series);
    }

    std::vector<int> retained;
    for (std::size_t i = 0; i < daily.rows.size(); ++i) {
        const DailyRow& row = daily.rows[i];
        auto target = row.get(pipeline.target);
        if (require_response) {
            if (!target) {
                design.dropped_rows["missing target"]++;
                continue;
            }
            if (*target <= 0.0) {
                design.dropped_rows["nonpositive response"]++;
                continue;
            }
        }
        bool complete = true;
        for (std::size_t s = 0; s < pipeline.specs.size(); ++s) {
            if (pipeline.specs[s].kind == FeatureKind::Categorical) continue;
            if (!continuous[s].values[i]) {
                design.dropped_rows["missing feature " + pipeline.specs[s].name]++;
                complete = false;
                break;
            }
        }
        if (complete) retained.push_back(static_cast<int>(i));
    }
    if (retained.empty()) throw EmptyDesign("no usable rows for station " + daily.station_id);

    const int n = static_cast<int>(retained.size());
    design.dates.reserve(n);
    design.response.resize(n);
    design.target_values.resize(n);
    for (int k = 0; k < n; ++k) {
        const DailyRow& row = daily.rows[retained[k]];
        design.dates.push_back(row.date);
        auto target = row.get(pipeline.target);
        if (target && *target > 0.0) {
            design.target_values(k) = *target;
            design.response(k) = std::log(*target);
        } else {
            design.target_values(k) = std::numeric_limits<double>::quiet_NaN();
            design.response(k) = std::numeric_limits<double>::quiet_NaN();
        }
    }

    for (std::size_t s = 0; s < pipeline.specs.size(); ++s) {
        const FeatureSpec& spec = pipeline.specs[s];
        DesignColumn col;
        col.name = spec.name;
        col.kind = spec.kind;
        col.values.resize(n);
        if (spec.kind == FeatureKind::Categorical) {
            col.levels = spec.source == FeatureSource::Month ? month_level_labels()
                                                             : weekday_level_labels();
            for (int k = 0; k < n; ++k) {
                Date d = design.dates[k];
                int level = spec.source == FeatureSource::Month ? d.month() - 1
                                                                : d.weekday_mon0();
                col.values(k) = static_cast<double>(level);
            }
        } else {
            for (int k = 0; k < n; ++k) col.values(k) = *continuous[s].values[retained[k]];
        }
        design.columns.push_back(std::move(col));
    }
    return design;
}

} // namespace

const DesignColumn* DesignMatrix::find_column(const std::string& name) const {
    for (const DesignColumn& c : columns)
        if (c.name == name) return &c;
    return nullptr;
}

DesignMatrix DesignMatrix::subset_columns(const std::vector<std::string>& names) const {
    DesignMatrix out;
    out.station_id = station_id;
    out.target = target;
    out.dates = dates;
    out.response = response;
    out.target_values = target_values;
    out.dropped_rows = dropped_rows;
    for (const std::string& name : names) {
        const DesignColumn* c = find_column(name);
        if (!c) throw MissingFeature("design has no column '" + name + "'");
        out.columns.push_back(*c);
    }
    return out;
}

int DesignMatrix::total_dropped() const {
    int total = 0;
    for (const auto& [reason, count] : dropped_rows) total += count;
    return total;
}

DesignMatrix build_design(const DailySeries& daily, const FeaturePipeline& pipeline) {
    return assemble(daily, pipeline, /*require_response=*/true);
}

DesignMatrix build_feature_rows(const DailySeries& daily, const FeaturePipeline& pipeline) {
    return assemble(daily, pipeline, /*require_response=*/false);
}

void write_design_csv(std::ostream& out, const DesignMatrix& design) {
    std::vector<std::string> header = {"date", "response", design.target};
    for (const DesignColumn& c : design.columns) header.push_back(c.name);
    out << join_csv_line(header) << "\n";
    char buf[40];
    for (int i = 0; i < design.n_rows(); ++i) {
        std::vector<std::string> cells = {design.dates[i].to_string()};
        std::snprintf(buf, sizeof(buf), "%.17g", design.response(i));
        cells.push_back(buf);
        std::snprintf(buf, sizeof(buf), "%.17g", design.target_values(i));
        cells.push_back(buf);
        for (const DesignColumn& c : design.columns) {
            if (c.kind == FeatureKind::Categorical) {
                cells.push_back(c.levels[static_cast<int>(c.values(i))]);
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", c.values(i));
                cells.push_back(buf);
            }
        }
        out << join_csv_line(cells) << "\n";
    }
}

std::vector<std::string> month_level_labels() {
    std::vector<std::string> labels;
    for (int m = 1; m <= 12; ++m) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "m%02d", m);
        labels.push_back(buf);
    }
    return labels;
}

std::vector<std::string> weekday_level_labels() {
    return {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
}

} // namespace airgam
