#include "lector/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace lector {

namespace {

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

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Round the axis maximum up to 1, 2 or 5 times a power of ten.
double nice_ceiling(double v) {
    if (!(v > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)));
    for (double step : {1.0, 2.0, 5.0, 10.0}) {
        if (v <= step * mag) return step * mag;
    }
    return 10.0 * mag;
}

}  // namespace

std::string render_bar_chart(const BarChart& chart) {
    const int width = 640, height = 400;
    const int left = 70, right = 20, top = 40, bottom = 90;
    const int plot_w = width - left - right;
    const int plot_h = height - top - bottom;

    double max_v = 0.0;
    for (const auto& [_, v] : chart.bars) max_v = std::max(max_v, v);
    const double axis_max = nice_ceiling(max_v);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
           escape_xml(chart.title) + "</text>\n";
    svg += "<text transform=\"translate(18," + std::to_string(top + plot_h / 2) +
           ") rotate(-90)\" text-anchor=\"middle\">" + escape_xml(chart.y_label) + "</text>\n";

    for (int t = 0; t <= 4; ++t) {
        const double v = axis_max * t / 4.0;
        const int y = top + plot_h - static_cast<int>(std::lround(plot_h * t / 4.0));
        svg += "<line x1=\"" + std::to_string(left) + "\" x2=\"" + std::to_string(left + plot_w) + "\" y1=\"" +
               std::to_string(y) + "\" y2=\"" + std::to_string(y) + "\" stroke=\"#ddd\"/>\n";
        svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + 4) +
               "\" text-anchor=\"end\">" + fixed(v, axis_max < 10 ? 2 : 0) + "</text>\n";
    }
    svg += "<line x1=\"" + std::to_string(left) + "\" x2=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top) +
           "\" y2=\"" + std::to_string(top + plot_h) + "\" stroke=\"black\"/>\n";

    const std::size_t n = std::max<std::size_t>(1, chart.bars.size());
    const double slot = static_cast<double>(plot_w) / static_cast<double>(n);
    for (std::size_t i = 0; i < chart.bars.size(); ++i) {
        const auto& [label, v] = chart.bars[i];
        const double bar_h = plot_h * (v / axis_max);
        const double x = left + slot * i + slot * 0.15;
        const double y = top + plot_h - bar_h;
        svg += "<rect x=\"" + fixed(x, 1) + "\" y=\"" + fixed(y, 1) + "\" width=\"" + fixed(slot * 0.7, 1) +
               "\" height=\"" + fixed(bar_h, 1) + "\" fill=\"#4477aa\"/>\n";
        svg += "<text x=\"" + fixed(x + slot * 0.35, 1) + "\" y=\"" + fixed(y - 4, 1) + "\" text-anchor=\"middle\">" +
               fixed(v, v < 10 ? 3 : 0) + "</text>\n";
        svg += "<text transform=\"translate(" + fixed(x + slot * 0.35, 1) + "," + std::to_string(top + plot_h + 14) +
               ") rotate(30)\" text-anchor=\"start\">" + escape_xml(label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::pair<std::string, std::string>> metric_charts(std::span<const SchedulerReport> reports) {
    BarChart sr{"Success rate", "fraction recalled", {}};
    BarChart eff{"Efficiency score", "efficiency", {}};
    BarChart ai{"Average interval", "days", {}};
    BarChart burden{"Learning burden", "review attempts", {}};
    for (const auto& r : reports) {
        sr.bars.emplace_back(r.scheduler_id, r.success_rate);
        eff.bars.emplace_back(r.scheduler_id, r.efficiency_score);
        ai.bars.emplace_back(r.scheduler_id, r.avg_interval);
        burden.bars.emplace_back(r.scheduler_id, static_cast<double>(r.total_attempts));
    }
    return {{"success_rate", render_bar_chart(sr)},
            {"efficiency_score", render_bar_chart(eff)},
            {"avg_interval", render_bar_chart(ai)},
            {"learning_burden", render_bar_chart(burden)}};
}

}  // namespace lector
