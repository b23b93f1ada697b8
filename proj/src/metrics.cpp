#include "lector/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "lector/errors.hpp"

namespace lector {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& s, std::size_t lineno) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("report CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
    }
    return value;
}

constexpr const char* kReportHeader = "algorithm,success_rate,efficiency_score,avg_interval,total_attempts";

}  // namespace

double success_rate(std::span<const ReviewEvent> log) {
    if (log.empty()) throw UndefinedMetric("success rate of an empty log is undefined");
    auto hits = std::count_if(log.begin(), log.end(), [](const ReviewEvent& e) { return e.success; });
    return static_cast<double>(hits) / static_cast<double>(log.size());
}

double avg_interval(std::span<const ReviewEvent> log) {
    if (log.empty()) throw UndefinedMetric("average interval of an empty log is undefined");
    double sum = 0.0;
    for (const ReviewEvent& e : log) sum += e.scheduled_interval;
    return sum / static_cast<double>(log.size());
}

double efficiency_score(double success_rate, double avg_interval, double kappa) {
    if (!(success_rate >= 0.0) || !(avg_interval >= 0.0)) {
        throw NumericError("efficiency score needs non-negative inputs");
    }
    return kappa * success_rate * avg_interval;
}

std::int64_t learning_burden(std::span<const ReviewEvent> log) { return static_cast<std::int64_t>(log.size()); }

SchedulerReport make_report(const std::string& scheduler_id, std::span<const ReviewEvent> log, double kappa) {
    SchedulerReport r;
    r.scheduler_id = scheduler_id;
    r.success_rate = success_rate(log);
    r.avg_interval = avg_interval(log);
    r.efficiency_score = efficiency_score(r.success_rate, r.avg_interval, kappa);
    r.total_attempts = learning_burden(log);
    return r;
}

ComparisonTable comparison_table(std::vector<SchedulerReport> reports) {
    if (reports.empty()) throw ConfigError("comparison table needs at least one report");
    std::set<std::string> seen;
    for (const auto& r : reports) {
        if (!seen.insert(r.scheduler_id).second) throw ConfigError("duplicate scheduler id '" + r.scheduler_id + "'");
    }
    std::stable_sort(reports.begin(), reports.end(), [](const SchedulerReport& a, const SchedulerReport& b) {
        if (a.success_rate != b.success_rate) return a.success_rate > b.success_rate;
        return a.efficiency_score > b.efficiency_score;
    });
    ComparisonTable table;
    table.rows = std::move(reports);
    if (table.rows.size() >= 2) {
        const double first = table.rows[0].success_rate;
        const double second = table.rows[1].success_rate;
        table.point_gap = first - second;
        if (second > 0.0) table.relative_improvement = (first - second) / second;
    }
    return table;
}

std::string reports_to_csv(std::span<const SchedulerReport> reports) {
    std::string out = std::string(kReportHeader) + "\n";
    for (const auto& r : reports) {
        out += r.scheduler_id + "," + format_double(r.success_rate) + "," + format_double(r.efficiency_score) + "," +
               format_double(r.avg_interval) + "," + std::to_string(r.total_attempts) + "\n";
    }
    return out;
}

std::vector<SchedulerReport> reports_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader) throw ConfigError("report CSV has an unexpected header");
    std::vector<SchedulerReport> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw ConfigError("report CSV line " + std::to_string(lineno) + " has wrong arity");
        SchedulerReport r;
        r.scheduler_id = cells[0];
        r.success_rate = parse_number<double>(cells[1], lineno);
        r.efficiency_score = parse_number<double>(cells[2], lineno);
        r.avg_interval = parse_number<double>(cells[3], lineno);
        r.total_attempts = parse_number<std::int64_t>(cells[4], lineno);
        out.push_back(std::move(r));
    }
    return out;
}

json reports_to_json(std::span<const SchedulerReport> reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back({{"scheduler_id", r.scheduler_id},
                       {"success_rate", r.success_rate},
                       {"efficiency_score", r.efficiency_score},
                       {"avg_interval", r.avg_interval},
                       {"total_attempts", r.total_attempts}});
    }
    return arr;
}

std::vector<SchedulerReport> reports_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("reports JSON must be an array");
    std::vector<SchedulerReport> out;
    try {
        for (const auto& o : j) {
            SchedulerReport r;
            r.scheduler_id = o.at("scheduler_id").get<std::string>();
            r.success_rate = o.at("success_rate").get<double>();
            r.efficiency_score = o.at("efficiency_score").get<double>();
            r.avg_interval = o.at("avg_interval").get<double>();
            r.total_attempts = o.at("total_attempts").get<std::int64_t>();
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad report JSON: ") + e.what());
    }
    return out;
}

json comparison_to_json(const ComparisonTable& table) {
    json j;
    j["rows"] = reports_to_json(table.rows);
    j["relative_improvement"] = table.relative_improvement ? json(*table.relative_improvement) : json(nullptr);
    j["point_gap"] = table.point_gap ? json(*table.point_gap) : json(nullptr);
    if (table.rows.size() >= 2) {
        j["leader"] = table.rows[0].scheduler_id;
        j["runner_up"] = table.rows[1].scheduler_id;
    }
    return j;
}

}  // namespace lector
