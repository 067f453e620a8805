#pragma once

#include "airgam/analysis.hpp"
#include "airgam/bundle.hpp"
#include "airgam/evaluation.hpp"
#include "airgam/selection.hpp"

#include <json.hpp>

#include <ostream>
#include <span>
#include <string>

namespace airgam {

using Json = nlohmann::json; // sorted keys -> deterministic dumps

// Versioned model document; doubles round-trip exactly through the JSON
// layer, so a reloaded bundle predicts bit-identically.
Json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const Json& j);

/// Serialized frozen-parameter block of a term (knots, coefficients, lambda
/// for smooths; levels and coefficients for categoricals). The transfer
/// stage compares these bytes to prove the freeze.
std::string smooth_params_json(const SmoothTerm& term);
std::string categorical_params_json(const CategoricalTerm& term);

Json trace_to_json(const SelectionTrace& trace);
void write_trace_table(std::ostream& out, const SelectionTrace& trace);

Json cv_report_to_json(const CvReport& report);
void write_cv_report_csv(std::ostream& out, const CvReport& report);

Json reduction_to_json(const ReductionReport& report);
void write_reduction_csv(std::ostream& out, std::span<const ReductionReport> reports);

Json scenario_to_json(const ScenarioReport& report);
void write_scenario_csv(std::ostream& out, const ScenarioReport& report);

Json mixture_to_json(const MixtureFit& fit);
Json weather_comparison_to_json(const std::vector<WeatherVariableSummary>& summary);

// file helpers
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);
ModelBundle load_bundle(const std::string& path);

} // namespace airgam
