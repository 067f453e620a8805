#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "airgam/csv.hpp"
#include "airgam/errors.hpp"
#include "airgam/evaluation.hpp"
#include "airgam/hash.hpp"
#include "airgam/model_io.hpp"
#include "airgam/transfer.hpp"

#include <cstring>

using namespace airgam;

namespace {

StationFitResult fit_example(std::uint64_t seed) {
    SynthConfig config;
    config.start = Date::from_ymd(2018, 1, 1);
    config.n_days = 730;
    config.noise_sigma = 0.1;
    config.seed = seed;
    config.drivers = {{.field = Field::T, .mean = 10.0, .seasonal_amplitude = 6.0,
                       .ar_coefficient = 0.3, .ar_sigma = 1.0},
                      {.field = Field::Ws, .mean = 4.0, .seasonal_amplitude = 0.5,
                       .ar_coefficient = 0.4, .ar_sigma = 0.6}};
    config.smooths = {{.driver = Field::T, .shape = SynthSmooth::Shape::Sine,
                       .amplitude = 0.5, .frequency = 0.4},
                      {.driver = Field::Ws, .shape = SynthSmooth::Shape::Linear,
                       .amplitude = -0.1}};
    config.weekday_multipliers = {1, 1, 1, 1, 1, 0.75, 0.75};
    auto [series, truth] = generate_synthetic(config);

    StationFitOptions options;
    options.target = Field::No2;
    options.specs = {make_feature_spec(FeatureSource::T), make_feature_spec(FeatureSource::Ws),
                     make_feature_spec(FeatureSource::Weekday)};
    options.run_selection = false;
    return fit_station_model(series, {config.start, config.start.add_days(729)}, options);
}

} // namespace

TEST_CASE("bundle json round trip is exact") {
    StationFitResult result = fit_example(3);
    result.bundle.transfer = TransferProvenance{
        .source_model_hash = "deadbeef00000000",
        .ld_period = {Date::from_ymd(2020, 3, 16), Date::from_ymd(2020, 4, 26)},
        .refit = {"intercept", "d"}};

    Json j = bundle_to_json(result.bundle);
    std::string once = j.dump(2);
    ModelBundle reloaded = bundle_from_json(Json::parse(once));
    std::string twice = bundle_to_json(reloaded).dump(2);
    CHECK(once == twice);

    // the reloaded model carries bit-identical parameters
    const GamModel& a = result.bundle.model;
    const GamModel& b = reloaded.model;
    CHECK(std::memcmp(&a.intercept, &b.intercept, sizeof(double)) == 0);
    REQUIRE(a.smooths.size() == b.smooths.size());
    for (std::size_t s = 0; s < a.smooths.size(); ++s) {
        CHECK(smooth_params_json(a.smooths[s]) == smooth_params_json(b.smooths[s]));
        CHECK(std::memcmp(a.smooths[s].coefficients.data(), b.smooths[s].coefficients.data(),
                          sizeof(double) * a.smooths[s].coefficients.size()) == 0);
    }
    REQUIRE(reloaded.transfer.has_value());
    CHECK(reloaded.transfer->refit == std::vector<std::string>{"intercept", "d"});
}

TEST_CASE("a reloaded bundle predicts bit-identically") {
    StationFitResult result = fit_example(7);

    SynthConfig config;
    config.start = Date::from_ymd(2020, 1, 1);
    config.n_days = 90;
    config.seed = 99;
    config.drivers = {{.field = Field::T, .mean = 10.0, .seasonal_amplitude = 6.0,
                       .ar_coefficient = 0.3, .ar_sigma = 1.0},
                      {.field = Field::Ws, .mean = 4.0, .seasonal_amplitude = 0.5,
                       .ar_coefficient = 0.4, .ar_sigma = 0.6}};
    config.smooths = {{.driver = Field::T, .shape = SynthSmooth::Shape::Linear,
                       .amplitude = 0.1}};
    auto [fresh, truth] = generate_synthetic(config);

    ModelBundle reloaded = bundle_from_json(bundle_to_json(result.bundle));
    DesignMatrix rows = build_design(fresh, result.bundle.pipeline);
    Prediction original = predict(result.bundle.model, rows);
    DesignMatrix rows2 = build_design(fresh, reloaded.pipeline);
    Prediction again = predict(reloaded.model, rows2);

    REQUIRE(original.concentration.size() == again.concentration.size());
    CHECK(std::memcmp(original.concentration.data(), again.concentration.data(),
                      sizeof(double) * original.concentration.size()) == 0);
}

TEST_CASE("format guards") {
    CHECK_THROWS_AS(bundle_from_json(Json{{"format", "something"}}), ConfigError);
    Json j = bundle_to_json(fit_example(5).bundle);
    j["format_version"] = 9;
    CHECK_THROWS_AS(bundle_from_json(j), ConfigError);
}

TEST_CASE("trace serialization keeps rejected candidates readable") {
    SelectionTrace trace;
    SelectionStep step;
    step.candidates.push_back({"ws", CandidateStatus::Fitted, 1.0, -120.0, ""});
    step.candidates.push_back(
        {"dup", CandidateStatus::VifRejected, std::numeric_limits<double>::infinity(),
         std::nullopt, ""});
    step.candidates.push_back({"bad", CandidateStatus::FitFailed, std::nullopt, std::nullopt,
                               "TooFewRows: need more"});
    step.chosen = "ws";
    step.aic_after = -120.0;
    trace.steps.push_back(step);
    SelectionStep stop;
    stop.chosen = std::nullopt;
    stop.stop_reason = "no candidate lowers AIC";
    stop.aic_after = -120.0;
    trace.steps.push_back(stop);
    trace.selected_order = {"ws"};
    trace.final_aic = -120.0;

    Json j = trace_to_json(trace);
    CHECK(j["steps"][0]["candidates"][1]["vif"] == "inf");
    CHECK(j["steps"][1]["chosen"].is_null());
    CHECK(j["steps"][1]["stop_reason"] == "no candidate lowers AIC");

    std::ostringstream table;
    write_trace_table(table, trace);
    CHECK(table.str().find("ws") != std::string::npos);
    CHECK(table.str().find("(stop)") != std::string::npos);
}

TEST_CASE("cv report serialization round trips the fold rows") {
    CvReport report;
    report.protocol = "ld";
    report.station_id = "sta1";
    report.folds.push_back({"ld_block00", false, "", 3, 1.25, 0.9});
    report.folds.push_back({"ld_block01", true, "no test rows", 0, 0.0, std::nullopt});
    report.recompute_aggregates();

    Json j = cv_report_to_json(report);
    CHECK(j["n_retained"] == 1);
    CHECK(j["n_skipped"] == 1);
    CHECK(j["folds"][1]["reason"] == "no test rows");

    std::ostringstream csv;
    write_cv_report_csv(csv, report);
    std::istringstream in(csv.str());
    auto lines = read_lines(in);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].rfind("protocol,", 0) == 0);
    CHECK(lines[1].find("ld_block00") != std::string::npos);
}

TEST_CASE("content hash fingerprints") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a64_hex("airgam") != fnv1a64_hex("airgaM"));
}
