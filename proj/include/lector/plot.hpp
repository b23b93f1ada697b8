#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lector/metrics.hpp"

namespace lector {

struct BarChart {
    std::string title;
    std::string y_label;
    std::vector<std::pair<std::string, double>> bars;
};

std::string render_bar_chart(const BarChart& chart);

// One chart per metric: success rate, efficiency, average interval, burden.
// Returned as (file stem, svg text).
std::vector<std::pair<std::string, std::string>> metric_charts(std::span<const SchedulerReport> reports);

}  // namespace lector
