// airgam: batch front end for the weather-aware air-quality model pipeline.
// Commands compose through serialized artifacts in the output directory:
//   synth -> fit -> {validate, reduce, transfer} -> {mix, scenario}

#include "airgam/analysis.hpp"
#include "airgam/bundle.hpp"
#include "airgam/errors.hpp"
#include "airgam/evaluation.hpp"
#include "airgam/hash.hpp"
#include "airgam/model_io.hpp"
#include "airgam/svg.hpp"
#include "airgam/transfer.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace airgam;

namespace {

constexpr const char* kToolName = "airgam";
constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::string observations_path;
    std::string stations_path;
    std::string region = "Other";
    int utc_offset_minutes = 0;
    Field target = Field::No2;
    double coverage_threshold = 0.75;
    std::vector<FeatureSpec> candidate_specs = default_candidate_specs();
    bool selection_enabled = true;
    double vif_threshold = 2.5;
    FitConfig fit;
    int train_months = 24;
    DateRange lockdown{Date::from_ymd(2020, 3, 16), Date::from_ymd(2020, 4, 26)};
    std::optional<DateRange> post_lockdown;
    int evaluation_year = 2019;
    int scenario_year = 2019;
    int mixture_window_days = 14;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int jobs = 0;
    Json raw;   // config echo for the manifest
    Json synth; // optional generator block
};

Date parse_date_or_throw(const Json& j, const std::string& what) {
    auto d = parse_date(j.get<std::string>());
    if (!d) throw ConfigError(what + " is not a YYYY-MM-DD date");
    return *d;
}

DateRange parse_range(const Json& j, const std::string& what) {
    DateRange r{parse_date_or_throw(j.at("start"), what + ".start"),
                parse_date_or_throw(j.at("end"), what + ".end")};
    if (!(r.start <= r.end)) throw ConfigError(what + ": start must not follow end");
    return r;
}

RunConfig load_config(const std::string& path) {
    Json j = load_json_file(path);
    RunConfig cfg;
    cfg.raw = j;

    if (!j.contains("data")) throw ConfigError("config needs a data block");
    cfg.observations_path = j.at("data").value("observations", "");
    cfg.stations_path = j.at("data").value("stations", "");
    if (cfg.observations_path.empty())
        throw ConfigError("config.data.observations must name the observation CSV");

    if (j.contains("region")) {
        cfg.region = j.at("region").value("name", cfg.region);
        cfg.utc_offset_minutes = j.at("region").value("utc_offset_minutes", 0);
    }
    if (j.contains("target")) {
        auto f = field_from_name(j.at("target").get<std::string>());
        if (!f || !is_pollutant(*f)) throw ConfigError("config.target must be a pollutant code");
        cfg.target = *f;
    }
    cfg.coverage_threshold = j.value("coverage_threshold", 0.75);
    if (cfg.coverage_threshold <= 0.0 || cfg.coverage_threshold > 1.0)
        throw ConfigError("coverage_threshold must be in (0, 1]");

    if (j.contains("features") && j.at("features").is_array()) {
        cfg.candidate_specs.clear();
        for (const Json& js : j.at("features")) {
            auto source = feature_source_from_name(js.at("source").get<std::string>());
            if (!source) throw ConfigError("unknown feature source in config.features");
            cfg.candidate_specs.push_back(make_feature_spec(
                *source, js.value("lag_days", 0), js.value("rolling_window_days", 0)));
        }
        if (cfg.candidate_specs.empty()) throw ConfigError("config.features must not be empty");
    }

    if (j.contains("selection")) {
        cfg.selection_enabled = j.at("selection").value("enabled", true);
        cfg.vif_threshold = j.at("selection").value("vif_threshold", 2.5);
        if (cfg.vif_threshold <= 1.0) throw ConfigError("vif_threshold must exceed 1");
    }
    if (j.contains("fit")) {
        const Json& jf = j.at("fit");
        cfg.fit.basis_size = jf.value("basis_size", 10);
        if (cfg.fit.basis_size < 4) throw ConfigError("fit.basis_size must be at least 4");
        double lo = jf.value("lambda_grid_min", 1e-4);
        double hi = jf.value("lambda_grid_max", 1e4);
        int points = jf.value("lambda_grid_points", 13);
        if (!(lo > 0) || !(hi >= lo) || points < 1)
            throw ConfigError("fit.lambda_grid must satisfy 0 < min <= max, points >= 1");
        cfg.fit.lambda_grid.clear();
        for (int i = 0; i < points; ++i) {
            double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
            cfg.fit.lambda_grid.push_back(lo * std::pow(hi / lo, t));
        }
        cfg.fit.lambda_cycles = jf.value("lambda_cycles", 3);
        if (jf.contains("aic_mode")) {
            auto mode = aic_mode_from_name(jf.at("aic_mode").get<std::string>());
            if (!mode) throw ConfigError("fit.aic_mode must be standard or paper_literal");
            cfg.fit.aic_mode = *mode;
        }
    }
    cfg.train_months = j.value("train_months", 24);
    if (j.contains("lockdown")) cfg.lockdown = parse_range(j.at("lockdown"), "lockdown");
    if (j.contains("post_lockdown"))
        cfg.post_lockdown = parse_range(j.at("post_lockdown"), "post_lockdown");
    cfg.evaluation_year = j.value("evaluation_year", 2019);
    cfg.scenario_year = j.value("scenario_year", 2019);
    cfg.mixture_window_days = j.value("mixture_window_days", 14);
    cfg.out_dir = j.value("out_dir", "out");
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.jobs = j.value("jobs", 0);
    if (j.contains("synth")) cfg.synth = j.at("synth");
    return cfg;
}

// ---------------------------------------------------------------------------
// Manifest

struct Manifest {
    std::string command;
    Json config_echo;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, hash
    std::vector<std::pair<std::string, std::string>> outputs; // path, hash
    std::vector<std::string> steps;
    std::vector<std::pair<std::string, std::string>> failures; // station, error
    std::vector<std::string> warnings;

    void add_input(const std::string& path) { inputs.emplace_back(path, hash_file(path)); }

    Json to_json() const {
        Json ji = Json::object();
        for (const auto& [path, hash] : inputs) ji[path] = hash;
        Json jo = Json::array();
        for (const auto& [path, hash] : outputs)
            jo.push_back(Json{{"path", path}, {"fnv1a64", hash}});
        Json jf = Json::array();
        for (const auto& [station, error] : failures)
            jf.push_back(Json{{"station", station}, {"error", error}});
        return Json{{"tool", Json{{"name", kToolName}, {"version", kToolVersion}}},
                    {"command", command},
                    {"config", config_echo},
                    {"inputs", ji},
                    {"outputs", jo},
                    {"steps", steps},
                    {"failures", jf},
                    {"warnings", warnings}};
    }
};

/// Funnels every artifact through one place so the manifest lists each output
/// file with its content hash.
struct OutputDir {
    fs::path dir;
    Manifest* manifest;

    std::string write(const std::string& name, const std::string& content) const {
        fs::path path = dir / name;
        write_text_file(path.string(), content);
        manifest->outputs.emplace_back(name, fnv1a64_hex(content));
        return path.string();
    }
    std::string write_json(const std::string& name, const Json& j) const {
        return write(name, j.dump(2) + "\n");
    }
};

std::string sanitize(const std::string& station_id) {
    std::string out;
    for (char c : station_id)
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

// ---------------------------------------------------------------------------
// Data loading

struct Dataset {
    std::vector<DailySeries> series; // sorted by station id
    std::vector<StationMeta> metas;
};

Dataset load_dataset(const RunConfig& cfg, Manifest& manifest) {
    std::ifstream obs_in(cfg.observations_path, std::ios::binary);
    if (!obs_in) throw ConfigError("cannot read observations at '" + cfg.observations_path + "'");
    manifest.add_input(cfg.observations_path);

    Dataset data;
    ParsedObservations parsed = parse_observations(obs_in);
    if (parsed.stats.rows_skipped > 0)
        manifest.warnings.push_back(std::to_string(parsed.stats.rows_skipped) +
                                    " observation rows skipped");
    if (parsed.stats.fields_rejected > 0)
        manifest.warnings.push_back(std::to_string(parsed.stats.fields_rejected) +
                                    " field values rejected (non-numeric or out of range)");

    data.series = aggregate_daily(parsed.observations,
                                  {.coverage_threshold = cfg.coverage_threshold,
                                   .utc_offset_minutes = cfg.utc_offset_minutes});

    if (!cfg.stations_path.empty()) {
        std::ifstream sta_in(cfg.stations_path, std::ios::binary);
        if (!sta_in) throw ConfigError("cannot read stations at '" + cfg.stations_path + "'");
        manifest.add_input(cfg.stations_path);
        data.metas = parse_station_meta(sta_in);
    }
    return data;
}

/// Bounded worker pool over the station list; outcomes land by index, so the
/// merged manifest is byte-stable regardless of scheduling.
void for_each_station(std::size_t count, int jobs, const std::function<void(std::size_t)>& work) {
    unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs)
                                  : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, count == 0 ? 1 : static_cast<unsigned>(count));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                work(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

int finish(Manifest& manifest, const OutputDir& out, std::size_t n_stations) {
    // the manifest lists every other artifact; it cannot hash itself
    write_text_file((out.dir / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
    for (const auto& [station, error] : manifest.failures)
        std::cerr << "station " << station << ": " << error << "\n";
    if (n_stations > 0 && manifest.failures.size() == n_stations) return 3;
    return 0;
}

// ---------------------------------------------------------------------------
// synth

SynthConfig synth_config_from_json(const Json& j, const RunConfig& cfg, std::uint64_t seed) {
    SynthConfig s;
    s.seed = seed;
    s.target = cfg.target;
    if (j.contains("start")) s.start = parse_date_or_throw(j.at("start"), "synth.start");
    s.n_days = j.value("n_days", 851);
    s.intercept = j.value("intercept", 3.0);
    s.noise_sigma = j.value("noise_sigma", 0.1);
    if (j.contains("weekday_multipliers")) {
        auto m = j.at("weekday_multipliers").get<std::vector<double>>();
        if (m.size() != 7) throw ConfigError("synth.weekday_multipliers needs 7 entries");
        std::copy(m.begin(), m.end(), s.weekday_multipliers.begin());
    } else {
        s.weekday_multipliers = {1, 1, 1, 1, 1, 0.7, 0.7};
    }
    if (j.contains("drivers")) {
        for (const Json& jd : j.at("drivers")) {
            SynthDriver d;
            auto f = field_from_name(jd.at("field").get<std::string>());
            if (!f) throw ConfigError("unknown synth driver field");
            d.field = *f;
            d.mean = jd.value("mean", 0.0);
            d.seasonal_amplitude = jd.value("seasonal_amplitude", 0.0);
            d.ar_coefficient = jd.value("ar_coefficient", 0.0);
            d.ar_sigma = jd.value("ar_sigma", 1.0);
            s.drivers.push_back(d);
        }
    } else {
        // T and DP accept any real value through the CSV round trip
        s.drivers = {{.field = Field::T, .mean = 10.0, .seasonal_amplitude = 6.0,
                      .ar_coefficient = 0.3, .ar_sigma = 1.2},
                     {.field = Field::Dp, .mean = 4.0, .seasonal_amplitude = 3.0,
                      .ar_coefficient = 0.4, .ar_sigma = 1.0}};
    }
    if (j.contains("smooths")) {
        for (const Json& js : j.at("smooths")) {
            SynthSmooth sm;
            auto f = field_from_name(js.at("driver").get<std::string>());
            if (!f) throw ConfigError("unknown synth smooth driver");
            sm.driver = *f;
            std::string shape = js.value("shape", "linear");
            if (shape == "linear")
                sm.shape = SynthSmooth::Shape::Linear;
            else if (shape == "sine")
                sm.shape = SynthSmooth::Shape::Sine;
            else
                throw ConfigError("synth smooth shape must be linear or sine");
            sm.amplitude = js.value("amplitude", 1.0);
            sm.frequency = js.value("frequency", 1.0);
            sm.phase = js.value("phase", 0.0);
            s.smooths.push_back(sm);
        }
    } else {
        s.smooths = {{.driver = Field::T, .shape = SynthSmooth::Shape::Sine,
                      .amplitude = 0.5, .frequency = 0.4},
                     {.driver = Field::Dp, .shape = SynthSmooth::Shape::Linear,
                      .amplitude = -0.08}};
    }
    return s;
}

int cmd_synth(const RunConfig& cfg, Manifest& manifest, const OutputDir& out) {
    manifest.steps = {"generate", "write_csv"};
    const Json j = cfg.synth.is_null() ? Json::object() : cfg.synth;
    int n_stations = j.value("stations", 1);
    double ld_scale = j.value("ld_scale", 1.0);
    DateRange ld_period = j.contains("ld_period")
                              ? parse_range(j.at("ld_period"), "synth.ld_period")
                              : cfg.lockdown;

    std::vector<Observation> all_obs;
    std::vector<StationMeta> metas;
    Json truths = Json::object();
    for (int s = 0; s < n_stations; ++s) {
        SynthConfig sc = synth_config_from_json(j, cfg, cfg.seed + static_cast<std::uint64_t>(s));
        auto [series, truth] = generate_synthetic(sc);
        char name[16];
        std::snprintf(name, sizeof(name), "synth%02d", s + 1);
        series.station_id = name;
        if (ld_scale != 1.0) {
            for (DailyRow& row : series.rows) {
                if (!ld_period.contains(row.date)) continue;
                int f = static_cast<int>(cfg.target);
                if (row.values[f]) row.values[f] = *row.values[f] * ld_scale;
            }
        }
        auto hourly = expand_to_hourly(series);
        all_obs.insert(all_obs.end(), hourly.begin(), hourly.end());
        metas.push_back({name, cfg.region, "Synthetic", std::nullopt, std::nullopt});
        truths[name] = Json{{"intercept", truth.intercept},
                            {"seed", sc.seed},
                            {"ld_scale", ld_scale},
                            {"ld_period", Json{{"start", ld_period.start.to_string()},
                                               {"end", ld_period.end.to_string()}}}};
    }

    std::ostringstream obs_csv;
    write_observations_csv(obs_csv, all_obs);
    out.write("observations.csv", obs_csv.str());
    std::ostringstream meta_csv;
    write_station_meta_csv(meta_csv, metas);
    out.write("stations.csv", meta_csv.str());
    out.write_json("synth.truth.json", truths);
    return finish(manifest, out, 0);
}

// ---------------------------------------------------------------------------
// fit

DateRange train_window(const RunConfig& cfg) {
    return {cfg.lockdown.start.add_months(-cfg.train_months), cfg.lockdown.start.add_days(-1)};
}

int cmd_fit(const RunConfig& cfg, Manifest& manifest, const OutputDir& out) {
    manifest.steps = {"ingest", "features", "selection", "fit", "serialize"};
    Dataset data = load_dataset(cfg, manifest);
    DateRange window = train_window(cfg);

    struct Outcome {
        std::string station;
        std::string error;
        Json model;
        Json trace;
        std::string trace_table;
    };
    std::vector<Outcome> outcomes(data.series.size());

    for_each_station(data.series.size(), cfg.jobs, [&](std::size_t i) {
        const DailySeries& series = data.series[i];
        Outcome& o = outcomes[i];
        o.station = series.station_id;
        try {
            StationFitOptions options;
            options.target = cfg.target;
            options.specs = cfg.candidate_specs;
            options.run_selection = cfg.selection_enabled;
            options.selection.vif_threshold = cfg.vif_threshold;
            options.selection.fit = cfg.fit;
            options.fit = cfg.fit;
            StationFitResult result = fit_station_model(series, window, options);
            o.model = bundle_to_json(result.bundle);
            if (result.trace) {
                o.trace = trace_to_json(*result.trace);
                std::ostringstream table;
                write_trace_table(table, *result.trace);
                o.trace_table = table.str();
            }
        } catch (const Error& e) {
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error = std::string("unexpected: ") + e.what();
        }
    });

    for (const Outcome& o : outcomes) {
        if (!o.error.empty()) {
            manifest.failures.emplace_back(o.station, o.error);
            continue;
        }
        std::string base = sanitize(o.station);
        out.write_json(base + ".model.json", o.model);
        if (!o.trace.is_null()) {
            out.write_json(base + ".trace.json", o.trace);
            out.write(base + ".trace.txt", o.trace_table);
        }
    }
    return finish(manifest, out, data.series.size());
}

// ---------------------------------------------------------------------------
// validate

ModelBundle load_station_model(const OutputDir& out, const std::string& station,
                               const std::string& suffix) {
    fs::path path = out.dir / (sanitize(station) + suffix);
    if (!fs::exists(path))
        throw MissingArtifact("expected model at '" + path.string() +
                              "' (run fit or transfer first)");
    return load_bundle(path.string());
}

int cmd_validate(const RunConfig& cfg, Manifest& manifest, const OutputDir& out,
                 const std::string& protocol) {
    manifest.steps = {"ingest", "folds", "cross_validate", "serialize"};
    Dataset data = load_dataset(cfg, manifest);

    struct Outcome {
        std::string station;
        std::string error;
        CvReport report;
    };
    std::vector<Outcome> outcomes(data.series.size());

    for_each_station(data.series.size(), cfg.jobs, [&](std::size_t i) {
        const DailySeries& series = data.series[i];
        Outcome& o = outcomes[i];
        o.station = series.station_id;
        try {
            if (protocol == "pre-ld") {
                FoldPlan plan = make_pre_ld_folds(cfg.evaluation_year,
                                                  kDefaultTrainLengthsMonths, series.span());
                FoldFitter fitter;
                if (cfg.selection_enabled) {
                    SelectionConfig sel;
                    sel.vif_threshold = cfg.vif_threshold;
                    sel.fit = cfg.fit;
                    fitter = make_selection_fitter(cfg.target, cfg.candidate_specs, sel);
                } else {
                    fitter = make_fixed_spec_fitter(cfg.target, cfg.candidate_specs, cfg.fit);
                }
                o.report = cross_validate(series, plan, fitter, "pre_ld");
            } else {
                ModelBundle bundle = load_station_model(out, series.station_id, ".model.json");
                DailySeries ld = slice_period(series, cfg.lockdown.start, cfg.lockdown.end);
                o.report = ld_validate(bundle.model, ld, bundle.pipeline, cfg.lockdown,
                                       TransferConfig{});
            }
        } catch (const Error& e) {
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error = std::string("unexpected: ") + e.what();
        }
    });

    Json summary = Json::array();
    std::string tag = protocol == "pre-ld" ? ".pre_ld.cv" : ".ld.cv";
    for (const Outcome& o : outcomes) {
        if (!o.error.empty()) {
            manifest.failures.emplace_back(o.station, o.error);
            continue;
        }
        std::string base = sanitize(o.station);
        out.write_json(base + tag + ".json", cv_report_to_json(o.report));
        std::ostringstream csv;
        write_cv_report_csv(csv, o.report);
        out.write(base + tag + ".csv", csv.str());
        Json row{{"station_id", o.station},
                 {"n_retained", o.report.n_retained},
                 {"n_skipped", o.report.n_skipped},
                 {"mean_rmse", o.report.mean_rmse}};
        if (o.report.mean_r2) row["mean_r2"] = *o.report.mean_r2;
        summary.push_back(std::move(row));
    }
    out.write_json("cv.summary" + tag + ".json",
                   Json{{"protocol", protocol}, {"stations", summary}});
    return finish(manifest, out, data.series.size());
}

// ---------------------------------------------------------------------------
// reduce

int cmd_reduce(const RunConfig& cfg, Manifest& manifest, const OutputDir& out) {
    manifest.steps = {"ingest", "load_models", "predict", "reduce", "serialize"};
    Dataset data = load_dataset(cfg, manifest);

    struct Outcome {
        std::string station;
        std::string error;
        ReductionReport report;
        Json weather;
        std::string chart;
    };
    std::vector<Outcome> outcomes(data.series.size());

    for_each_station(data.series.size(), cfg.jobs, [&](std::size_t i) {
        const DailySeries& series = data.series[i];
        Outcome& o = outcomes[i];
        o.station = series.station_id;
        try {
            ModelBundle bundle = load_station_model(out, series.station_id, ".model.json");
            o.report = estimate_reduction(bundle.model, bundle.pipeline, series, cfg.lockdown);

            // per-day overlay for the chart
            DailySeries window = slice_period(series, cfg.lockdown.start, cfg.lockdown.end);
            DesignMatrix design = build_design(window, bundle.pipeline);
            Prediction pred = predict(bundle.model, design);
            SvgSeries measured{"measured", "#333333", {}};
            SvgSeries predicted{"pre-LD prediction", "#d62728", {}};
            for (int r = 0; r < design.n_rows(); ++r) {
                measured.points.emplace_back(design.dates[r], design.target_values(r));
                predicted.points.emplace_back(design.dates[r], pred.concentration(r));
            }
            o.chart = render_line_chart(series.station_id + ": lockdown vs counterfactual",
                                        design.target + " ug/m3", {measured, predicted});

            // descriptive weather comparison against the same window a year before
            DateRange prior{cfg.lockdown.start.add_months(-12), cfg.lockdown.end.add_months(-12)};
            DailySeries prior_slice = slice_period(series, prior.start, prior.end);
            if (!prior_slice.rows.empty())
                o.weather = weather_comparison_to_json(compare_weather(window, prior_slice));
        } catch (const Error& e) {
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error = std::string("unexpected: ") + e.what();
        }
    });

    std::vector<ReductionReport> station_reports;
    for (const Outcome& o : outcomes) {
        if (!o.error.empty()) {
            manifest.failures.emplace_back(o.station, o.error);
            continue;
        }
        station_reports.push_back(o.report);
        std::string base = sanitize(o.station);
        out.write(base + ".series.svg", o.chart);
        if (!o.weather.is_null()) out.write_json(base + ".weather.json", o.weather);
    }

    Json all = Json::array();
    for (const ReductionReport& r : station_reports) all.push_back(reduction_to_json(r));
    std::vector<ReductionReport> class_reports;
    if (!data.metas.empty() && !station_reports.empty()) {
        std::vector<ReductionReport> with_meta;
        for (const ReductionReport& r : station_reports) {
            bool known = std::any_of(data.metas.begin(), data.metas.end(),
                                     [&](const StationMeta& m) { return m.station_id == r.key; });
            if (known)
                with_meta.push_back(r);
            else
                manifest.warnings.push_back("station " + r.key + " missing from metadata");
        }
        if (!with_meta.empty()) {
            class_reports = aggregate_by_class(with_meta, data.metas);
            for (const ReductionReport& r : class_reports) all.push_back(reduction_to_json(r));
        }
    }
    out.write_json("reduction.report.json", Json{{"reports", all}});
    std::vector<ReductionReport> flat = station_reports;
    flat.insert(flat.end(), class_reports.begin(), class_reports.end());
    std::ostringstream csv;
    write_reduction_csv(csv, flat);
    out.write("reduction.report.csv", csv.str());
    return finish(manifest, out, data.series.size());
}

// ---------------------------------------------------------------------------
// transfer

int cmd_transfer(const RunConfig& cfg, Manifest& manifest, const OutputDir& out) {
    manifest.steps = {"ingest", "load_models", "transfer_fit", "serialize"};
    Dataset data = load_dataset(cfg, manifest);

    struct Outcome {
        std::string station;
        std::string error;
        Json model;
    };
    std::vector<Outcome> outcomes(data.series.size());

    for_each_station(data.series.size(), cfg.jobs, [&](std::size_t i) {
        const DailySeries& series = data.series[i];
        Outcome& o = outcomes[i];
        o.station = series.station_id;
        try {
            fs::path source_path = out.dir / (sanitize(series.station_id) + ".model.json");
            if (!fs::exists(source_path))
                throw MissingArtifact("expected model at '" + source_path.string() + "'");
            ModelBundle bundle = load_bundle(source_path.string());

            DailySeries ld = slice_period(series, cfg.lockdown.start, cfg.lockdown.end);
            if (ld.rows.empty())
                throw NoOverlap("no lockdown data in " + cfg.lockdown.to_string());
            DesignMatrix design = build_design(ld, bundle.pipeline);

            TransferConfig tc;
            ModelBundle ld_bundle = bundle;
            ld_bundle.model = transfer_fit(bundle.model, design, tc);
            ld_bundle.train_period = cfg.lockdown;
            ld_bundle.transfer =
                TransferProvenance{.source_model_hash = hash_file(source_path.string()),
                                   .ld_period = cfg.lockdown,
                                   .refit = tc.refit_names()};
            o.model = bundle_to_json(ld_bundle);
        } catch (const Error& e) {
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error = std::string("unexpected: ") + e.what();
        }
    });

    for (const Outcome& o : outcomes) {
        if (!o.error.empty()) {
            manifest.failures.emplace_back(o.station, o.error);
            continue;
        }
        out.write_json(sanitize(o.station) + ".ld.model.json", o.model);
    }
    return finish(manifest, out, data.series.size());
}

// ---------------------------------------------------------------------------
// mix

int cmd_mix(const RunConfig& cfg, Manifest& manifest, const OutputDir& out) {
    manifest.steps = {"ingest", "load_models", "predict", "mixture", "serialize"};
    if (!cfg.post_lockdown)
        throw ConfigError("config.post_lockdown period is required for the mix command");
    Dataset data = load_dataset(cfg, manifest);

    struct Outcome {
        std::string station;
        std::string error;
        Json report;
        std::string alpha_csv;
        std::string alpha_chart;
        std::string overlay_chart;
    };
    std::vector<Outcome> outcomes(data.series.size());

    for_each_station(data.series.size(), cfg.jobs, [&](std::size_t i) {
        const DailySeries& series = data.series[i];
        Outcome& o = outcomes[i];
        o.station = series.station_id;
        try {
            ModelBundle pre = load_station_model(out, series.station_id, ".model.json");
            ModelBundle ld = load_station_model(out, series.station_id, ".ld.model.json");

            DailySeries window =
                slice_period(series, cfg.post_lockdown->start, cfg.post_lockdown->end);
            if (window.rows.empty())
                throw NoOverlap("no data in " + cfg.post_lockdown->to_string());
            DesignMatrix design = build_design(window, pre.pipeline);
            Prediction pre_pred = predict(pre.model, design);
            Prediction ld_pred = predict(ld.model, design);

            AlignedTriples triples;
            triples.dates = design.dates;
            for (int r = 0; r < design.n_rows(); ++r) {
                triples.m_ld.push_back(ld_pred.concentration(r));
                triples.m_pre.push_back(pre_pred.concentration(r));
                triples.measured.push_back(design.target_values(r));
            }
            MixtureFit whole = fit_mixture(triples.m_ld, triples.m_pre, triples.measured);
            auto alpha_series = mixture_over_time(triples, cfg.mixture_window_days);

            Json jr = mixture_to_json(whole);
            jr["station_id"] = series.station_id;
            jr["period"] = Json{{"start", cfg.post_lockdown->start.to_string()},
                                {"end", cfg.post_lockdown->end.to_string()}};
            jr["window_days"] = cfg.mixture_window_days;
            o.report = std::move(jr);

            std::ostringstream csv;
            csv << "date,alpha\n";
            SvgSeries alpha_line{"alpha (LD contribution)", "#1f77b4", {}};
            char buf[40];
            for (const auto& [date, alpha] : alpha_series) {
                std::snprintf(buf, sizeof(buf), "%.10g", alpha);
                csv << date.to_string() << "," << buf << "\n";
                alpha_line.points.emplace_back(date, alpha);
            }
            o.alpha_csv = csv.str();
            o.alpha_chart =
                render_line_chart(series.station_id + ": rolling mixture", "alpha", {alpha_line});

            SvgSeries measured{"measured", "#333333", {}};
            SvgSeries pre_line{"pre-LD prediction", "#d62728", {}};
            SvgSeries ld_line{"LD prediction", "#2ca02c", {}};
            for (int r = 0; r < design.n_rows(); ++r) {
                measured.points.emplace_back(design.dates[r], design.target_values(r));
                pre_line.points.emplace_back(design.dates[r], pre_pred.concentration(r));
                ld_line.points.emplace_back(design.dates[r], ld_pred.concentration(r));
            }
            o.overlay_chart = render_line_chart(series.station_id + ": post-lockdown",
                                                design.target + " ug/m3",
                                                {measured, pre_line, ld_line});
        } catch (const Error& e) {
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error = std::string("unexpected: ") + e.what();
        }
    });

    for (const Outcome& o : outcomes) {
        if (!o.error.empty()) {
            manifest.failures.emplace_back(o.station, o.error);
            continue;
        }
        std::string base = sanitize(o.station);
        out.write_json(base + ".mix.report.json", o.report);
        out.write(base + ".alpha.csv", o.alpha_csv);
        out.write(base + ".alpha.svg", o.alpha_chart);
        out.write(base + ".postld.svg", o.overlay_chart);
    }
    return finish(manifest, out, data.series.size());
}

// ---------------------------------------------------------------------------
// scenario

int cmd_scenario(const RunConfig& cfg, Manifest& manifest, const OutputDir& out) {
    manifest.steps = {"ingest", "load_models", "predict", "scenario", "serialize"};
    Dataset data = load_dataset(cfg, manifest);

    struct Outcome {
        std::string station;
        std::string error;
        ScenarioReport report;
    };
    std::vector<Outcome> outcomes(data.series.size());

    for_each_station(data.series.size(), cfg.jobs, [&](std::size_t i) {
        const DailySeries& series = data.series[i];
        Outcome& o = outcomes[i];
        o.station = series.station_id;
        try {
            ModelBundle ld = load_station_model(out, series.station_id, ".ld.model.json");
            o.report = hypothetical_scenario(ld.model, ld.pipeline, series, cfg.scenario_year);
        } catch (const Error& e) {
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error = std::string("unexpected: ") + e.what();
        }
    });

    Json all = Json::array();
    for (const Outcome& o : outcomes) {
        if (!o.error.empty()) {
            manifest.failures.emplace_back(o.station, o.error);
            continue;
        }
        all.push_back(scenario_to_json(o.report));
        std::ostringstream csv;
        write_scenario_csv(csv, o.report);
        out.write(sanitize(o.station) + ".scenario.report.csv", csv.str());
    }
    out.write_json("scenario.report.json", Json{{"reports", all}});
    return finish(manifest, out, data.series.size());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weather-aware air-quality models: pre-lockdown GAMs, lockdown "
                 "transfer, mixture and scenario analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    int jobs_override = -1;
    app.add_option("--config", config_path, "run configuration JSON")->required();
    app.add_option("--out", out_override, "output directory (overrides config)");
    CLI::Option* seed_opt = app.add_option("--seed", seed_override, "seed override");
    app.add_option("--jobs", jobs_override, "worker threads (0 = hardware)");

    CLI::App* sub_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    CLI::App* sub_fit = app.add_subcommand("fit", "fit pre-lockdown station models");
    CLI::App* sub_validate = app.add_subcommand("validate", "temporal cross-validation");
    std::string protocol;
    sub_validate->add_option("--protocol", protocol, "pre-ld or ld")->required();
    CLI::App* sub_reduce = app.add_subcommand("reduce", "lockdown reduction estimates");
    CLI::App* sub_transfer = app.add_subcommand("transfer", "derive lockdown models");
    CLI::App* sub_mix = app.add_subcommand("mix", "post-lockdown mixture analysis");
    CLI::App* sub_scenario = app.add_subcommand("scenario", "hypothetical year-long lockdown");

    // global flags may follow the subcommand: `airgam fit --config run.json`
    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough(true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_opt->count() > 0) cfg.seed = seed_override;
        if (jobs_override >= 0) cfg.jobs = jobs_override;
        cfg.raw["out_dir"] = cfg.out_dir;
        cfg.raw["seed"] = cfg.seed;

        if (!protocol.empty() && protocol != "pre-ld" && protocol != "ld")
            throw ConfigError("--protocol must be pre-ld or ld");

        fs::create_directories(cfg.out_dir);
        Manifest manifest;
        manifest.config_echo = cfg.raw;
        OutputDir out{fs::path(cfg.out_dir), &manifest};

        if (sub_synth->parsed()) {
            manifest.command = "synth";
            return cmd_synth(cfg, manifest, out);
        }
        if (sub_fit->parsed()) {
            manifest.command = "fit";
            return cmd_fit(cfg, manifest, out);
        }
        if (sub_validate->parsed()) {
            manifest.command = "validate --protocol " + protocol;
            return cmd_validate(cfg, manifest, out, protocol);
        }
        if (sub_reduce->parsed()) {
            manifest.command = "reduce";
            return cmd_reduce(cfg, manifest, out);
        }
        if (sub_transfer->parsed()) {
            manifest.command = "transfer";
            return cmd_transfer(cfg, manifest, out);
        }
        if (sub_mix->parsed()) {
            manifest.command = "mix";
            return cmd_mix(cfg, manifest, out);
        }
        if (sub_scenario->parsed()) {
            manifest.command = "scenario";
            return cmd_scenario(cfg, manifest, out);
        }
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
}
