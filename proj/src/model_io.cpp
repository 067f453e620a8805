#include "airgam/model_io.hpp"

#include "airgam/csv.hpp"
#include "airgam/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace airgam {

namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const Json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
    return v;
}

Json range_to_json(const DateRange& r) {
    return Json{{"start", r.start.to_string()}, {"end", r.end.to_string()}};
}

DateRange range_from_json(const Json& j) {
    auto start = parse_date(j.at("start").get<std::string>());
    auto end = parse_date(j.at("end").get<std::string>());
    if (!start || !end) throw ConfigError("malformed date range in document");
    return DateRange{*start, *end};
}

Json spec_to_json(const FeatureSpec& spec) {
    return Json{{"name", spec.name},
                {"kind", spec.kind == FeatureKind::Smooth ? "smooth" : "categorical"},
                {"source", feature_source_name(spec.source)},
                {"lag_days", spec.lag_days},
                {"rolling_window_days", spec.rolling_window_days}};
}

FeatureSpec spec_from_json(const Json& j) {
    auto source = feature_source_from_name(j.at("source").get<std::string>());
    if (!source) throw ConfigError("unknown feature source in document");
    return make_feature_spec(*source, j.value("lag_days", 0), j.value("rolling_window_days", 0));
}

Json finite_or_string(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return v;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

std::string smooth_params_json(const SmoothTerm& term) {
    Json params{{"boundary", Json::array({term.boundary_lo, term.boundary_hi})},
                {"interior_knots", term.interior_knots},
                {"degree", term.degree},
                {"penalty_order", term.penalty_order},
                {"coefficients", vector_to_json(term.coefficients)},
                {"lambda", term.lambda}};
    return params.dump();
}

std::string categorical_params_json(const CategoricalTerm& term) {
    Json params{{"levels", term.levels}, {"coefficients", vector_to_json(term.coefficients)}};
    return params.dump();
}

Json bundle_to_json(const ModelBundle& bundle) {
    const GamModel& m = bundle.model;
    Json smooths = Json::array();
    for (const SmoothTerm& t : m.smooths) {
        smooths.push_back(Json{{"feature", t.feature},
                               {"edf", t.edf},
                               {"params", Json::parse(smooth_params_json(t))}});
    }
    Json cats = Json::array();
    for (const CategoricalTerm& t : m.categoricals) {
        cats.push_back(Json{{"feature", t.feature},
                            {"edf", t.edf},
                            {"params", Json::parse(categorical_params_json(t))}});
    }

    Json model{{"intercept", m.intercept},
               {"smooth_terms", smooths},
               {"categorical_terms", cats},
               {"sigma2", m.sigma2},
               {"n_train", m.n_train},
               {"total_edf", m.total_edf},
               {"log_likelihood", m.log_likelihood},
               {"aic", m.aic},
               {"aic_mode", aic_mode_name(m.aic_mode)},
               {"fit_info", Json{{"lambda_grid", m.fit_info.lambda_grid},
                                 {"lambda_cycles", m.fit_info.lambda_cycles},
                                 {"lambda_search_converged", m.fit_info.lambda_search_converged}}}};

    Json specs = Json::array();
    for (const FeatureSpec& s : bundle.pipeline.specs) specs.push_back(spec_to_json(s));
    Json pipeline{{"target", field_name(bundle.pipeline.target)}, {"specs", specs}};
    if (bundle.pipeline.pca) {
        const PcaModel& p = *bundle.pipeline.pca;
        pipeline["pca"] = Json{{"means", vector_to_json(p.means)},
                               {"scales", vector_to_json(p.scales)},
                               {"loading", vector_to_json(p.loading)},
                               {"explained_variance_ratio", p.explained_variance_ratio}};
    }

    Json j{{"format", "airgam-model"},
           {"format_version", bundle.format_version},
           {"station_id", bundle.station_id},
           {"target", field_name(bundle.target)},
           {"train_period", range_to_json(bundle.train_period)},
           {"model", model},
           {"pipeline", pipeline}};
    if (bundle.transfer) {
        j["transfer_provenance"] = Json{{"source_model_hash", bundle.transfer->source_model_hash},
                                        {"ld_period", range_to_json(bundle.transfer->ld_period)},
                                        {"refit", bundle.transfer->refit}};
    }
    return j;
}

ModelBundle bundle_from_json(const Json& j) {
    if (j.value("format", "") != "airgam-model")
        throw ConfigError("document is not an airgam model");
    ModelBundle bundle;
    bundle.format_version = j.at("format_version").get<int>();
    if (bundle.format_version != 1)
        throw ConfigError("unsupported model format version " +
                          std::to_string(bundle.format_version));
    bundle.station_id = j.at("station_id").get<std::string>();
    auto target = field_from_name(j.at("target").get<std::string>());
    if (!target) throw ConfigError("unknown target pollutant in model document");
    bundle.target = *target;
    bundle.train_period = range_from_json(j.at("train_period"));

    const Json& jm = j.at("model");
    GamModel& m = bundle.model;
    m.intercept = jm.at("intercept").get<double>();
    m.sigma2 = jm.at("sigma2").get<double>();
    m.n_train = jm.at("n_train").get<int>();
    m.total_edf = jm.at("total_edf").get<double>();
    m.log_likelihood = jm.at("log_likelihood").get<double>();
    m.aic = jm.at("aic").get<double>();
    auto mode = aic_mode_from_name(jm.at("aic_mode").get<std::string>());
    if (!mode) throw ConfigError("unknown aic mode in model document");
    m.aic_mode = *mode;
    const Json& fi = jm.at("fit_info");
    m.fit_info.lambda_grid = fi.at("lambda_grid").get<std::vector<double>>();
    m.fit_info.lambda_cycles = fi.at("lambda_cycles").get<int>();
    m.fit_info.lambda_search_converged = fi.at("lambda_search_converged").get<bool>();

    for (const Json& jt : jm.at("smooth_terms")) {
        SmoothTerm t;
        t.feature = jt.at("feature").get<std::string>();
        t.edf = jt.at("edf").get<double>();
        const Json& params = jt.at("params");
        t.boundary_lo = params.at("boundary")[0].get<double>();
        t.boundary_hi = params.at("boundary")[1].get<double>();
        t.interior_knots = params.at("interior_knots").get<std::vector<double>>();
        t.degree = params.at("degree").get<int>();
        t.penalty_order = params.at("penalty_order").get<int>();
        t.coefficients = vector_from_json(params.at("coefficients"));
        t.lambda = params.at("lambda").get<double>();
        m.smooths.push_back(std::move(t));
    }
    for (const Json& jt : jm.at("categorical_terms")) {
        CategoricalTerm t;
        t.feature = jt.at("feature").get<std::string>();
        t.edf = jt.at("edf").get<double>();
        const Json& params = jt.at("params");
        t.levels = params.at("levels").get<std::vector<std::string>>();
        t.coefficients = vector_from_json(params.at("coefficients"));
        m.categoricals.push_back(std::move(t));
    }

    const Json& jp = j.at("pipeline");
    auto ptarget = field_from_name(jp.at("target").get<std::string>());
    if (!ptarget) throw ConfigError("unknown pipeline target in model document");
    bundle.pipeline.target = *ptarget;
    for (const Json& js : jp.at("specs")) bundle.pipeline.specs.push_back(spec_from_json(js));
    if (jp.contains("pca")) {
        PcaModel p;
        p.means = vector_from_json(jp.at("pca").at("means"));
        p.scales = vector_from_json(jp.at("pca").at("scales"));
        p.loading = vector_from_json(jp.at("pca").at("loading"));
        p.explained_variance_ratio = jp.at("pca").at("explained_variance_ratio").get<double>();
        bundle.pipeline.pca = p;
    }

    if (j.contains("transfer_provenance")) {
        TransferProvenance t;
        const Json& jtp = j.at("transfer_provenance");
        t.source_model_hash = jtp.at("source_model_hash").get<std::string>();
        t.ld_period = range_from_json(jtp.at("ld_period"));
        t.refit = jtp.at("refit").get<std::vector<std::string>>();
        bundle.transfer = std::move(t);
    }
    return bundle;
}

Json trace_to_json(const SelectionTrace& trace) {
    Json steps = Json::array();
    for (const SelectionStep& step : trace.steps) {
        Json candidates = Json::array();
        for (const CandidateRecord& rec : step.candidates) {
            Json jc{{"name", rec.name}};
            switch (rec.status) {
                case CandidateStatus::Fitted: jc["status"] = "fitted"; break;
                case CandidateStatus::VifRejected: jc["status"] = "vif_rejected"; break;
                case CandidateStatus::FitFailed: jc["status"] = "fit_failed"; break;
            }
            if (rec.vif) jc["vif"] = finite_or_string(*rec.vif);
            if (rec.aic) jc["aic"] = *rec.aic;
            if (!rec.note.empty()) jc["note"] = rec.note;
            candidates.push_back(std::move(jc));
        }
        Json js{{"candidates", candidates}, {"aic_after", step.aic_after}};
        if (step.chosen) {
            js["chosen"] = *step.chosen;
        } else {
            js["chosen"] = nullptr;
            js["stop_reason"] = step.stop_reason;
        }
        steps.push_back(std::move(js));
    }
    return Json{{"format", "airgam-trace"},
                {"steps", steps},
                {"selected_order", trace.selected_order},
                {"final_aic", trace.final_aic}};
}

void write_trace_table(std::ostream& out, const SelectionTrace& trace) {
    out << "step  chosen          aic_after      candidates  vif_rejected  fit_failed\n";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const SelectionStep& step = trace.steps[i];
        int rejected = 0, failed = 0;
        for (const CandidateRecord& rec : step.candidates) {
            if (rec.status == CandidateStatus::VifRejected) rejected++;
            if (rec.status == CandidateStatus::FitFailed) failed++;
        }
        char line[160];
        std::snprintf(line, sizeof(line), "%-5zu %-15s %-14.6g %-11zu %-13d %d\n", i + 1,
                      step.chosen ? step.chosen->c_str() : "(stop)", step.aic_after,
                      step.candidates.size(), rejected, failed);
        out << line;
        if (!step.chosen && !step.stop_reason.empty())
            out << "      stop: " << step.stop_reason << "\n";
    }
}

Json cv_report_to_json(const CvReport& report) {
    Json folds = Json::array();
    for (const FoldResult& f : report.folds) {
        Json jf{{"label", f.label}, {"skipped", f.skipped}};
        if (f.skipped) {
            jf["reason"] = f.skip_reason;
        } else {
            jf["n_test"] = f.n_test;
            jf["rmse"] = f.rmse;
            if (f.r2) jf["r2"] = *f.r2;
        }
        folds.push_back(std::move(jf));
    }
    Json j{{"format", "airgam-cv"},
           {"protocol", report.protocol},
           {"station_id", report.station_id},
           {"folds", folds},
           {"n_retained", report.n_retained},
           {"n_skipped", report.n_skipped},
           {"mean_rmse", report.mean_rmse},
           {"sd_rmse", report.sd_rmse}};
    if (report.mean_r2) j["mean_r2"] = *report.mean_r2;
    if (report.sd_r2) j["sd_r2"] = *report.sd_r2;
    return j;
}

void write_cv_report_csv(std::ostream& out, const CvReport& report) {
    out << "protocol,station_id,fold,skipped,reason,n_test,rmse,r2\n";
    for (const FoldResult& f : report.folds) {
        std::vector<std::string> cells = {report.protocol, report.station_id, f.label,
                                          f.skipped ? "1" : "0", f.skip_reason};
        if (f.skipped) {
            cells.insert(cells.end(), {"", "", ""});
        } else {
            cells.push_back(std::to_string(f.n_test));
            cells.push_back(fmt(f.rmse));
            cells.push_back(f.r2 ? fmt(*f.r2) : "");
        }
        out << join_csv_line(cells) << "\n";
    }
}

Json reduction_to_json(const ReductionReport& report) {
    Json j{{"key", report.key},
           {"pollutant", report.pollutant},
           {"period", range_to_json(report.period)},
           {"n_days", report.n_days},
           {"predicted_total", report.predicted_total},
           {"measured_total", report.measured_total},
           {"percent_change", report.percent_change},
           {"clamped_predictions", report.clamped_predictions},
           {"dropped_days", report.dropped_days}};
    // weather-naive secondary statistic, kept clearly apart from the
    // model-based estimate
    if (report.year_over_year_percent)
        j["year_over_year_percent_raw"] = *report.year_over_year_percent;
    return j;
}

void write_reduction_csv(std::ostream& out, std::span<const ReductionReport> reports) {
    out << "key,pollutant,period_start,period_end,n_days,predicted_total,measured_total,"
           "percent_change,clamped_predictions,dropped_days\n";
    for (const ReductionReport& r : reports) {
        std::vector<std::string> cells = {
            r.key,         r.pollutant,
            r.period.start.to_string(), r.period.end.to_string(),
            std::to_string(r.n_days),   fmt(r.predicted_total),
            fmt(r.measured_total),      fmt(r.percent_change),
            std::to_string(r.clamped_predictions), std::to_string(r.dropped_days)};
        out << join_csv_line(cells) << "\n";
    }
}

Json scenario_to_json(const ScenarioReport& report) {
    Json months = Json::array();
    for (const MonthBreakdown& m : report.months) {
        Json jm{{"month", m.month},
                {"n_days", m.n_days},
                {"predicted_total", m.predicted_total},
                {"measured_total", m.measured_total}};
        if (m.percent) jm["percent"] = *m.percent;
        months.push_back(std::move(jm));
    }
    return Json{{"key", report.key},
                {"pollutant", report.pollutant},
                {"year", report.year},
                {"predicted_total", report.predicted_total},
                {"measured_total", report.measured_total},
                {"hypothetical_reduction_percent", report.hypothetical_reduction_percent},
                {"months", months},
                {"n_days", report.n_days},
                {"dropped_days", report.dropped_days},
                {"clamped_predictions", report.clamped_predictions}};
}

void write_scenario_csv(std::ostream& out, const ScenarioReport& report) {
    out << "key,pollutant,year,month,n_days,predicted_total,measured_total,percent\n";
    for (const MonthBreakdown& m : report.months) {
        std::vector<std::string> cells = {report.key,
                                          report.pollutant,
                                          std::to_string(report.year),
                                          std::to_string(m.month),
                                          std::to_string(m.n_days),
                                          fmt(m.predicted_total),
                                          fmt(m.measured_total),
                                          m.percent ? fmt(*m.percent) : ""};
        out << join_csv_line(cells) << "\n";
    }
    std::vector<std::string> total = {report.key,
                                      report.pollutant,
                                      std::to_string(report.year),
                                      "total",
                                      std::to_string(report.n_days),
                                      fmt(report.predicted_total),
                                      fmt(report.measured_total),
                                      fmt(report.hypothetical_reduction_percent)};
    out << join_csv_line(total) << "\n";
}

Json mixture_to_json(const MixtureFit& fit) {
    return Json{{"alpha", fit.alpha},
                {"objective", fit.objective},
                {"n_days", fit.n_days},
                {"breakpoints_examined", fit.breakpoints_examined},
                {"unconstrained_alpha", fit.unconstrained_alpha},
                {"unconstrained_objective", fit.unconstrained_objective}};
}

Json weather_comparison_to_json(const std::vector<WeatherVariableSummary>& summary) {
    Json vars = Json::array();
    for (const WeatherVariableSummary& s : summary) {
        vars.push_back(Json{{"variable", s.variable},
                            {"n_a", s.n_a},
                            {"n_b", s.n_b},
                            {"mean_a", s.mean_a},
                            {"mean_b", s.mean_b},
                            {"quartiles_a", s.quartiles_a},
                            {"quartiles_b", s.quartiles_b}});
    }
    return Json{{"format", "airgam-weather-comparison"}, {"variables", vars}};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("short write to '" + path + "'");
}

Json load_json_file(const std::string& path) {
    Json j = Json::parse(read_text_file(path), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("'" + path + "' is not valid JSON");
    return j;
}

void save_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

ModelBundle load_bundle(const std::string& path) {
    return bundle_from_json(load_json_file(path));
}

} // namespace airgam
