#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "airgam/errors.hpp"
#include "airgam/model_io.hpp"
#include "airgam/transfer.hpp"

#include <cmath>

using namespace airgam;

namespace {

SynthConfig base_config(std::uint64_t seed) {
    SynthConfig config;
    config.start = Date::from_ymd(2018, 1, 1);
    config.n_days = 851; // Jan 2018 .. Apr 30 2020: pre-LD years plus the lockdown
    config.intercept = 3.0;
    config.noise_sigma = 0.1;
    config.seed = seed;
    // bounded seasonal driver keeps lockdown inputs inside the training range
    config.drivers = {{.field = Field::T, .mean = 10.0, .seasonal_amplitude = 6.0,
                       .ar_coefficient = 0.0, .ar_sigma = 0.0}};
    config.smooths = {{.driver = Field::T, .shape = SynthSmooth::Shape::Sine,
                       .amplitude = 0.5, .frequency = 0.4}};
    config.weekday_multipliers = {1, 1, 1, 1, 1, 0.7, 0.7};
    return config;
}

const DateRange kPreLdPeriod{Date::from_ymd(2018, 1, 1), Date::from_ymd(2019, 12, 31)};
const DateRange kLdPeriod{Date::from_ymd(2020, 3, 16), Date::from_ymd(2020, 4, 26)}; // 42 days

FeaturePipeline pipeline() {
    FeaturePipeline p;
    p.target = Field::No2;
    p.specs = {make_feature_spec(FeatureSource::T), make_feature_spec(FeatureSource::Month),
               make_feature_spec(FeatureSource::Weekday)};
    return p;
}

GamModel fit_pre_ld(const DailySeries& series) {
    DailySeries train = slice_period(series, kPreLdPeriod.start, kPreLdPeriod.end);
    return fit_gam(build_design(train, pipeline()), FitConfig{});
}

const CategoricalTerm& weekday_term(const GamModel& model) {
    for (const CategoricalTerm& t : model.categoricals)
        if (t.feature == "d") return t;
    throw std::logic_error("no weekday term");
}

std::vector<std::string> frozen_blocks(const GamModel& model) {
    std::vector<std::string> blocks;
    for (const SmoothTerm& t : model.smooths) blocks.push_back(smooth_params_json(t));
    for (const CategoricalTerm& t : model.categoricals)
        if (t.feature != "d") blocks.push_back(categorical_params_json(t));
    return blocks;
}

} // namespace

TEST_CASE("unchanged process: refit stays near the source coefficients") {
    Eigen::VectorXd coef_error_sum = Eigen::VectorXd::Zero(7);
    const int n_seeds = 10;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
        auto [series, truth] = generate_synthetic(base_config(seed));
        GamModel pre = fit_pre_ld(series);

        DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);
        DesignMatrix ld_design = build_design(ld, pipeline());
        GamModel post = transfer_fit(pre, ld_design, TransferConfig{});

        // frozen blocks byte-identical in every run
        CHECK(frozen_blocks(pre) == frozen_blocks(post));
        coef_error_sum += weekday_term(post).coefficients - weekday_term(pre).coefficients;
    }
    // 42 lockdown days give 6 samples per weekday; averaged over ten seeds the
    // refit contrast must sit on the source value
    for (int l = 0; l < 7; ++l) CHECK(std::abs(coef_error_sum(l) / n_seeds) < 0.05);
}

TEST_CASE("uniform 30 percent reduction shows up as a ln 0.7 intercept shift") {
    double shift_sum = 0.0;
    const int n_seeds = 10;
    for (std::uint64_t seed = 21; seed < 21 + n_seeds; ++seed) {
        auto [series, truth] = generate_synthetic(base_config(seed));
        GamModel pre = fit_pre_ld(series);

        DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);
        for (DailyRow& row : ld.rows) {
            int f = static_cast<int>(Field::No2);
            row.values[f] = *row.values[f] * 0.7;
        }
        GamModel post = transfer_fit(pre, build_design(ld, pipeline()), TransferConfig{});
        CHECK(frozen_blocks(pre) == frozen_blocks(post));
        shift_sum += post.intercept - pre.intercept;
    }
    CHECK(std::abs(shift_sum / n_seeds - std::log(0.7)) < 0.03);
}

TEST_CASE("vanished weekday structure refits to zero") {
    Eigen::VectorXd coef_sum = Eigen::VectorXd::Zero(7);
    const int n_seeds = 10;
    for (std::uint64_t seed = 41; seed < 41 + n_seeds; ++seed) {
        auto [series, truth] = generate_synthetic(base_config(seed));
        GamModel pre = fit_pre_ld(series);
        CHECK(std::abs(weekday_term(pre).coefficients(5) - std::log(0.7)) < 0.1);

        // lockdown has the same weather process but no weekday effect
        SynthConfig flat = base_config(seed + 1000);
        flat.weekday_multipliers = {1, 1, 1, 1, 1, 1, 1};
        auto [flat_series, flat_truth] = generate_synthetic(flat);
        DailySeries ld = slice_period(flat_series, kLdPeriod.start, kLdPeriod.end);

        GamModel post = transfer_fit(pre, build_design(ld, pipeline()), TransferConfig{});
        coef_sum += weekday_term(post).coefficients;
    }
    for (int l = 0; l < 7; ++l) CHECK(std::abs(coef_sum(l) / n_seeds) < 0.05);
}

TEST_CASE("transfer is idempotent on its own output") {
    auto [series, truth] = generate_synthetic(base_config(3));
    GamModel pre = fit_pre_ld(series);
    DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);
    DesignMatrix design = build_design(ld, pipeline());

    GamModel once = transfer_fit(pre, design, TransferConfig{});
    GamModel twice = transfer_fit(once, design, TransferConfig{});
    CHECK(std::abs(once.intercept - twice.intercept) < 1e-10);
    CHECK((weekday_term(once).coefficients - weekday_term(twice).coefficients)
              .cwiseAbs()
              .maxCoeff() < 1e-10);
}

TEST_CASE("reprojection onto the training data stays within the residual scale") {
    auto [series, truth] = generate_synthetic(base_config(5));
    DailySeries train = slice_period(series, kPreLdPeriod.start, kPreLdPeriod.end);
    DesignMatrix design = build_design(train, pipeline());
    GamModel pre = fit_gam(design, FitConfig{});

    GamModel reprojected = transfer_fit(pre, design, TransferConfig{});
    Prediction p_pre = predict(pre, design);
    Prediction p_re = predict(reprojected, design);

    double diff_rmse = std::sqrt((p_pre.ln_scale - p_re.ln_scale).squaredNorm() / design.n_rows());
    double resid_rmse =
        std::sqrt((design.response - p_pre.ln_scale).squaredNorm() / design.n_rows());
    CHECK(diff_rmse <= resid_rmse);
}

TEST_CASE("lockdown validation yields exactly 14 folds on a 42-day window") {
    auto [series, truth] = generate_synthetic(base_config(7));
    GamModel pre = fit_pre_ld(series);
    DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);

    CvReport report = ld_validate(pre, ld, pipeline(), kLdPeriod, TransferConfig{});
    CHECK(report.protocol == "ld");
    CHECK(report.folds.size() == 14);
    CHECK(report.n_retained == 14);
    for (const FoldResult& f : report.folds) CHECK(f.n_test == 3);
}

TEST_CASE("regime change: the transferred model beats the source on lockdown blocks") {
    SynthConfig config = base_config(11);
    auto [series, truth] = generate_synthetic(config);
    GamModel pre = fit_pre_ld(series);

    // lockdown regime: traffic collapse scales everything down 40%
    DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);
    for (DailyRow& row : ld.rows) {
        int f = static_cast<int>(Field::No2);
        row.values[f] = *row.values[f] * 0.6;
    }

    CvReport ld_report = ld_validate(pre, ld, pipeline(), kLdPeriod, TransferConfig{});

    // the untouched pre-LD model scored on the same folds
    FoldFitter keep_pre = [&](const DailySeries&) {
        return FoldModel{pre, pipeline()};
    };
    CvReport pre_report = cross_validate(ld, make_ld_folds(kLdPeriod), keep_pre, "ld");

    CHECK(ld_report.n_retained == 14);
    CHECK(pre_report.n_retained == 14);
    CHECK(ld_report.mean_rmse < pre_report.mean_rmse);
}

TEST_CASE("noise-free lockdown is recovered exactly") {
    SynthConfig config = base_config(13);
    config.noise_sigma = 0.0;
    // a linear truth lies in the spline null space, so the fit is exact and
    // the only error left is floating-point noise
    config.smooths = {{.driver = Field::T, .shape = SynthSmooth::Shape::Linear,
                       .amplitude = 0.05}};
    auto [series, truth] = generate_synthetic(config);
    GamModel pre = fit_pre_ld(series);
    DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);

    CvReport report = ld_validate(pre, ld, pipeline(), kLdPeriod, TransferConfig{});
    CHECK(report.n_retained == 14);
    CHECK(report.mean_rmse < 1e-6);
}

TEST_CASE("missing weekday coverage is rejected") {
    auto [series, truth] = generate_synthetic(base_config(17));
    GamModel pre = fit_pre_ld(series);
    DailySeries ld = slice_period(series, kLdPeriod.start, kLdPeriod.end);
    // strike every Sunday
    std::erase_if(ld.rows, [](const DailyRow& r) { return r.date.weekday_mon0() == 6; });
    CHECK_THROWS_AS(transfer_fit(pre, build_design(ld, pipeline()), TransferConfig{}),
                    InsufficientCoverage);

    DailySeries tiny = slice_period(series, kLdPeriod.start, kLdPeriod.start.add_days(9));
    CHECK_THROWS_AS(transfer_fit(pre, build_design(tiny, pipeline()), TransferConfig{}),
                    InsufficientCoverage);
}

TEST_CASE("the refit set must not be empty") {
    TransferConfig config;
    config.refit_intercept = false;
    config.refit_weekday = false;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}
