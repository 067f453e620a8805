#pragma once

#include "airgam/dates.hpp"

#include <string>
#include <vector>

namespace airgam {

/// One line of a chart; gaps in the date sequence split the polyline.
struct SvgSeries {
    std::string label;
    std::string color; // e.g. "#1f77b4"
    std::vector<std::pair<Date, double>> points;
};

/// Self-contained SVG line chart over a date axis. Output is deterministic
/// for identical inputs (fixed float formatting, no timestamps).
std::string render_line_chart(const std::string& title, const std::string& y_label,
                              const std::vector<SvgSeries>& series, int width = 960,
                              int height = 400);

} // namespace airgam
