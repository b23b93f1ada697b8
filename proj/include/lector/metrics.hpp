#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lector/core_types.hpp"

namespace lector {

// Efficiency = kappa * success rate * average interval.
inline constexpr double kEfficiencyKappa = 0.8;

// UndefinedMetric on an empty log.
double success_rate(std::span<const ReviewEvent> log);
double avg_interval(std::span<const ReviewEvent> log);

double efficiency_score(double success_rate, double avg_interval, double kappa = kEfficiencyKappa);

std::int64_t learning_burden(std::span<const ReviewEvent> log);

struct SchedulerReport {
    std::string scheduler_id;
    double success_rate = 0.0;
    double efficiency_score = 0.0;
    double avg_interval = 0.0;
    std::int64_t total_attempts = 0;

    bool operator==(const SchedulerReport&) const = default;
};

SchedulerReport make_report(const std::string& scheduler_id, std::span<const ReviewEvent> log,
                            double kappa = kEfficiencyKappa);

struct ComparisonTable {
    std::vector<SchedulerReport> rows;  // success rate descending, ties by efficiency
    // First row against the second: (first - second) / second, and first - second.
    std::optional<double> relative_improvement;
    std::optional<double> point_gap;
};

// Throws ConfigError on an empty list or duplicate scheduler ids.
ComparisonTable comparison_table(std::vector<SchedulerReport> reports);

// algorithm,success_rate,efficiency_score,avg_interval,total_attempts
std::string reports_to_csv(std::span<const SchedulerReport> reports);
std::vector<SchedulerReport> reports_from_csv(const std::string& csv);

json reports_to_json(std::span<const SchedulerReport> reports);
std::vector<SchedulerReport> reports_from_json(const json& j);

json comparison_to_json(const ComparisonTable& table);

}  // namespace lector
