#include "airgam/evaluation.hpp"

#include "airgam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace airgam {

bool Fold::in_train(Date d) const {
    return std::any_of(train.begin(), train.end(),
                       [d](const DateRange& r) { return r.contains(d); });
}

FoldPlan make_pre_ld_folds(int eval_year, std::span<const int> train_lengths_months,
                           std::optional<DateRange> data_span) {
    FoldPlan plan;
    for (int length : train_lengths_months) {
        for (int month = 1; month <= 12; ++month) {
            Date cutoff = Date::from_ymd(eval_year, month, 1);
            Fold fold;
            fold.train = {DateRange{cutoff.add_months(-length), cutoff.add_days(-1)}};
            fold.test = DateRange{cutoff, cutoff.add_months(1).add_days(-1)};
            char label[32];
            std::snprintf(label, sizeof(label), "L%02d_%04d-%02d", length, eval_year, month);
            fold.label = label;

            if (data_span) {
                if (fold.train[0].start < data_span->start) {
                    plan.skipped.emplace_back(fold.label,
                                              "insufficient history: train needs " +
                                                  fold.train[0].start.to_string());
                    continue;
                }
                if (fold.test.start > data_span->end) {
                    plan.skipped.emplace_back(fold.label, "test month beyond data span");
                    continue;
                }
            }
            plan.folds.push_back(std::move(fold));
        }
    }
    return plan;
}

FoldPlan make_ld_folds(DateRange ld_period, int test_block_days) {
    if (test_block_days < 1) throw ConfigError("test block must be at least one day");
    const int n_days = ld_period.n_days();
    const int n_blocks = n_days / test_block_days;
    if (n_blocks < 2)
        throw PeriodTooShort("lockdown period of " + std::to_string(n_days) +
                             " days holds fewer than two " +
                             std::to_string(test_block_days) + "-day test blocks");

    FoldPlan plan;
    for (int b = 0; b < n_blocks; ++b) {
        Fold fold;
        Date test_start = ld_period.start.add_days(b * test_block_days);
        fold.test = DateRange{test_start, test_start.add_days(test_block_days - 1)};
        if (fold.test.start > ld_period.start)
            fold.train.push_back(DateRange{ld_period.start, fold.test.start.add_days(-1)});
        if (fold.test.end < ld_period.end)
            fold.train.push_back(DateRange{fold.test.end.add_days(1), ld_period.end});
        char label[24];
        std::snprintf(label, sizeof(label), "ld_block%02d", b);
        fold.label = label;
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

double rmse(std::span<const double> pred, std::span<const double> meas) {
    if (pred.size() != meas.size()) throw LengthMismatch("rmse inputs differ in length");
    if (pred.empty()) throw LengthMismatch("rmse of empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - meas[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

double r2(std::span<const double> pred, std::span<const double> meas) {
    if (pred.size() != meas.size()) throw LengthMismatch("r2 inputs differ in length");
    if (pred.size() < 2) throw LengthMismatch("r2 needs at least two points");
    double mean = 0.0;
    for (double m : meas) mean += m;
    mean /= static_cast<double>(meas.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ss_tot += (meas[i] - mean) * (meas[i] - mean);
        ss_res += (meas[i] - pred[i]) * (meas[i] - pred[i]);
    }
    if (ss_tot <= 0.0) throw ZeroVariance("measurements are constant");
    return 1.0 - ss_res / ss_tot;
}

void CvReport::recompute_aggregates() {
    n_retained = 0;
    n_skipped = 0;
    double rmse_sum = 0.0, r2_sum = 0.0;
    int r2_count = 0;
    for (const FoldResult& f : folds) {
        if (f.skipped) {
            n_skipped++;
            continue;
        }
        n_retained++;
        rmse_sum += f.rmse;
        if (f.r2) {
            r2_sum += *f.r2;
            r2_count++;
        }
    }
    mean_rmse = n_retained > 0 ? rmse_sum / n_retained : 0.0;
    mean_r2 = r2_count > 0 ? std::optional<double>(r2_sum / r2_count) : std::nullopt;

    double rmse_var = 0.0, r2_var = 0.0;
    for (const FoldResult& f : folds) {
        if (f.skipped) continue;
        rmse_var += (f.rmse - mean_rmse) * (f.rmse - mean_rmse);
        if (f.r2 && mean_r2) r2_var += (*f.r2 - *mean_r2) * (*f.r2 - *mean_r2);
    }
    sd_rmse = n_retained > 1 ? std::sqrt(rmse_var / (n_retained - 1)) : 0.0;
    sd_r2 = r2_count > 1 ? std::optional<double>(std::sqrt(r2_var / (r2_count - 1)))
                         : std::nullopt;
}

namespace {

DailySeries concat_train_slices(const DailySeries& data, const Fold& fold) {
    DailySeries out;
    out.station_id = data.station_id;
    for (const DateRange& r : fold.train) {
        DailySeries piece = slice_period(data, r.start, r.end);
        out.rows.insert(out.rows.end(), piece.rows.begin(), piece.rows.end());
    }
    std::sort(out.rows.begin(), out.rows.end(),
              [](const DailyRow& a, const DailyRow& b) { return a.date < b.date; });
    return out;
}

} // namespace

CvReport cross_validate(const DailySeries& data, const FoldPlan& plan,
                        const FoldFitter& fitter, const std::string& protocol) {
    CvReport report;
    report.protocol = protocol;
    report.station_id = data.station_id;

    for (const auto& [label, reason] : plan.skipped) {
        FoldResult r;
        r.label = label;
        r.skipped = true;
        r.skip_reason = reason;
        report.folds.push_back(std::move(r));
    }

    for (const Fold& fold : plan.folds) {
        FoldResult result;
        result.label = fold.label;
        try {
            DailySeries train_data = concat_train_slices(data, fold);
            if (train_data.rows.empty()) throw TooFewRows("no train rows in fold window");
            FoldModel fm = fitter(train_data);

            DailySeries test_data = slice_period(data, fold.test.start, fold.test.end);
            if (test_data.rows.empty()) throw NoOverlap("no test rows in fold window");
            DesignMatrix test_design = build_design(test_data, fm.pipeline);

            Prediction pred = predict(fm.model, test_design);
            std::span<const double> p(pred.concentration.data(),
                                      static_cast<std::size_t>(pred.concentration.size()));
            std::span<const double> m(test_design.target_values.data(),
                                      static_cast<std::size_t>(test_design.target_values.size()));
            result.n_test = static_cast<int>(p.size());
            result.rmse = rmse(p, m);
            if (p.size() >= 2) {
                try {
                    result.r2 = r2(p, m);
                } catch (const ZeroVariance&) {
                    result.r2 = std::nullopt;
                }
            }
        } catch (const Error& e) {
            result.skipped = true;
            result.skip_reason = e.what();
        }
        report.folds.push_back(std::move(result));
    }
    report.recompute_aggregates();
    return report;
}

FoldFitter make_fixed_spec_fitter(Field target, std::vector<FeatureSpec> specs,
                                  FitConfig config) {
    return [target, specs = std::move(specs), config](const DailySeries& train) {
        FoldModel out;
        out.pipeline.target = target;
        out.pipeline.specs = specs;
        if (out.pipeline.uses_pca()) out.pipeline.pca = fit_pca(train);
        DesignMatrix design = build_design(train, out.pipeline);
        out.model = fit_gam(design, config);
        return out;
    };
}

FoldFitter make_selection_fitter(Field target, std::vector<FeatureSpec> pool,
                                 SelectionConfig config) {
    return [target, pool = std::move(pool), config](const DailySeries& train) {
        FoldModel out;
        FeaturePipeline full;
        full.target = target;
        full.specs = pool;
        if (full.uses_pca()) full.pca = fit_pca(train);
        DesignMatrix design = build_design(train, full);
        auto [model, trace] = forward_select(design, config);
        model = ensure_weekday(model, design, config.fit);

        out.pipeline.target = target;
        out.pipeline.pca = full.pca;
        for (const std::string& name : model.term_names()) {
            auto it = std::find_if(pool.begin(), pool.end(),
                                   [&](const FeatureSpec& s) { return s.name == name; });
            if (it != pool.end()) out.pipeline.specs.push_back(*it);
        }
        out.model = std::move(model);
        return out;
    };
}

double SynthSmooth::value(double x) const {
    switch (shape) {
        case Shape::Linear: return amplitude * x;
        case Shape::Sine: return amplitude * std::sin(frequency * x + phase);
    }
    return 0.0;
}

std::pair<DailySeries, SynthTruth> generate_synthetic(const SynthConfig& config) {
    if (config.noise_sigma < 0) throw ConfigError("noise sigma must be >= 0");
    for (double m : config.weekday_multipliers)
        if (!(m > 0)) throw ConfigError("weekday multipliers must be positive");
    if (config.n_days < 1) throw ConfigError("n_days must be positive");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SynthTruth truth;
    truth.intercept = config.intercept;
    truth.dates.reserve(config.n_days);
    for (int i = 0; i < config.n_days; ++i) truth.dates.push_back(config.start.add_days(i));

    // drivers first, then smooths, then noise: a fixed draw order keeps the
    // stream reproducible when components are added behind a given seed
    truth.driver_values.resize(config.drivers.size());
    for (std::size_t d = 0; d < config.drivers.size(); ++d) {
        const SynthDriver& drv = config.drivers[d];
        std::vector<double>& values = truth.driver_values[d];
        values.reserve(config.n_days);
        double ar_state = 0.0;
        for (int i = 0; i < config.n_days; ++i) {
            ar_state = drv.ar_coefficient * ar_state + gauss(rng) * drv.ar_sigma;
            double seasonal =
                drv.seasonal_amplitude *
                std::sin(2.0 * std::numbers::pi * truth.dates[i].day_of_year() / 365.25);
            values.push_back(drv.mean + seasonal + ar_state);
        }
    }

    truth.smooth_values.resize(config.smooths.size());
    for (std::size_t s = 0; s < config.smooths.size(); ++s) {
        const SynthSmooth& sm = config.smooths[s];
        auto drv_it = std::find_if(config.drivers.begin(), config.drivers.end(),
                                   [&](const SynthDriver& d) { return d.field == sm.driver; });
        if (drv_it == config.drivers.end())
            throw ConfigError("smooth reads an undeclared driver field");
        const std::vector<double>& driver =
            truth.driver_values[static_cast<std::size_t>(drv_it - config.drivers.begin())];
        truth.smooth_values[s].reserve(config.n_days);
        for (int i = 0; i < config.n_days; ++i)
            truth.smooth_values[s].push_back(sm.value(driver[i]));
    }

    truth.weekday_ln_effect.reserve(config.n_days);
    truth.noise.reserve(config.n_days);
    truth.ln_y.reserve(config.n_days);
    for (int i = 0; i < config.n_days; ++i) {
        double eta = config.intercept;
        for (const auto& sv : truth.smooth_values) eta += sv[i];
        double wd_effect = std::log(config.weekday_multipliers[truth.dates[i].weekday_mon0()]);
        double noise = config.noise_sigma > 0 ? gauss(rng) * config.noise_sigma : 0.0;
        truth.weekday_ln_effect.push_back(wd_effect);
        truth.noise.push_back(noise);
        truth.ln_y.push_back(eta + wd_effect + noise);
    }

    DailySeries series;
    series.station_id = "synth";
    series.rows.reserve(config.n_days);
    for (int i = 0; i < config.n_days; ++i) {
        DailyRow row;
        row.date = truth.dates[i];
        for (std::size_t d = 0; d < config.drivers.size(); ++d) {
            int f = static_cast<int>(config.drivers[d].field);
            row.values[f] = truth.driver_values[d][i];
            row.coverage[f] = 1.0;
        }
        int tf = static_cast<int>(config.target);
        row.values[tf] = std::exp(truth.ln_y[i]);
        row.coverage[tf] = 1.0;
        series.rows.push_back(std::move(row));
    }
    return {std::move(series), std::move(truth)};
}

std::vector<Observation> expand_to_hourly(const DailySeries& daily) {
    std::vector<Observation> out;
    out.reserve(daily.rows.size() * 24);
    for (const DailyRow& row : daily.rows) {
        for (int hour = 0; hour < 24; ++hour) {
            Observation obs;
            obs.station_id = daily.station_id;
            obs.timestamp = static_cast<EpochSeconds>(row.date.days) * 86400 + hour * 3600;
            obs.values = row.values;
            out.push_back(std::move(obs));
        }
    }
    return out;
}

} // namespace airgam
