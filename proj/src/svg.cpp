#include "airgam/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace airgam {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& y_label,
                              const std::vector<SvgSeries>& series, int width, int height) {
    const double margin_left = 64, margin_right = 16, margin_top = 36, margin_bottom = 44;
    const double plot_w = width - margin_left - margin_right;
    const double plot_h = height - margin_top - margin_bottom;

    Date min_date{std::numeric_limits<std::int32_t>::max()};
    Date max_date{std::numeric_limits<std::int32_t>::min()};
    double min_y = std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const SvgSeries& s : series) {
        for (const auto& [d, v] : s.points) {
            if (!std::isfinite(v)) continue;
            any = true;
            min_date = std::min(min_date, d);
            max_date = std::max(max_date, d);
            min_y = std::min(min_y, v);
            max_y = std::max(max_y, v);
        }
    }
    if (!any) {
        min_date = max_date = Date{0};
        min_y = 0;
        max_y = 1;
    }
    if (min_y == max_y) {
        min_y -= 1;
        max_y += 1;
    }
    double pad = 0.05 * (max_y - min_y);
    min_y -= pad;
    max_y += pad;
    int day_span = std::max(1, max_date.days - min_date.days);

    auto x_of = [&](Date d) {
        return margin_left + plot_w * (d.days - min_date.days) / day_span;
    };
    auto y_of = [&](double v) {
        return margin_top + plot_h * (1.0 - (v - min_y) / (max_y - min_y));
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(title) << "</text>\n";

    // frame and y grid
    svg << "<rect x=\"" << num(margin_left) << "\" y=\"" << num(margin_top) << "\" width=\""
        << num(plot_w) << "\" height=\"" << num(plot_h)
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    const int y_ticks = 5;
    for (int t = 0; t <= y_ticks; ++t) {
        double v = min_y + (max_y - min_y) * t / y_ticks;
        double y = y_of(v);
        svg << "<line x1=\"" << num(margin_left) << "\" y1=\"" << num(y) << "\" x2=\""
            << num(margin_left + plot_w) << "\" y2=\"" << num(y)
            << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
        char label[40];
        std::snprintf(label, sizeof(label), "%.4g", v);
        svg << "<text x=\"" << num(margin_left - 6) << "\" y=\"" << num(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << label
            << "</text>\n";
    }
    // x ticks: about six date labels
    const int x_ticks = 6;
    for (int t = 0; t <= x_ticks; ++t) {
        Date d = min_date.add_days(static_cast<int>(std::lround(
            static_cast<double>(day_span) * t / x_ticks)));
        double x = x_of(d);
        svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(margin_top + plot_h) << "\" x2=\""
            << num(x) << "\" y2=\"" << num(margin_top + plot_h + 4)
            << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(x) << "\" y=\"" << num(margin_top + plot_h + 16)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << d.to_string() << "</text>\n";
    }
    svg << "<text x=\"14\" y=\"" << num(margin_top + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
        << "transform=\"rotate(-90 14 " << num(margin_top + plot_h / 2) << ")\">"
        << escape_xml(y_label) << "</text>\n";

    // series, with gaps splitting the path
    for (const SvgSeries& s : series) {
        std::ostringstream path;
        bool pen_down = false;
        Date prev{0};
        for (const auto& [d, v] : s.points) {
            if (!std::isfinite(v)) {
                pen_down = false;
                continue;
            }
            bool continue_line = pen_down && d.days == prev.days + 1;
            path << (continue_line ? "L" : "M") << num(x_of(d)) << " " << num(y_of(v)) << " ";
            pen_down = true;
            prev = d;
        }
        svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.3\"/>\n";
    }

    // legend
    double lx = margin_left + 8, ly = margin_top + 14;
    for (const SvgSeries& s : series) {
        svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
            << num(lx + 18) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.label)
            << "</text>\n";
        ly += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace airgam
