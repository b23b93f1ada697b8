#include "lector/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "lector/errors.hpp"
#include "lector/llm_client.hpp"
#include "lector/metrics.hpp"
#include "lector/plot.hpp"
#include "lector/schedulers.hpp"
#include "lector/simulator.hpp"

#ifndef LECTOR_GIT_DESCRIBE
#define LECTOR_GIT_DESCRIBE "unknown"
#endif

namespace lector {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

bool is_provider_failure(const std::exception& e) {
    return dynamic_cast<const SimilarityUnavailable*>(&e) || dynamic_cast<const OutOfRangeError*>(&e) ||
           dynamic_cast<const ParseError*>(&e) || dynamic_cast<const TransportError*>(&e);
}

void print_table(const ComparisonTable& table, std::ostream& out) {
    out << std::left << std::setw(20) << "algorithm" << std::right << std::setw(14) << "success_rate"
        << std::setw(18) << "efficiency_score" << std::setw(14) << "avg_interval" << std::setw(16) << "total_attempts"
        << "\n";
    for (const auto& r : table.rows) {
        out << std::left << std::setw(20) << r.scheduler_id << std::right << std::fixed << std::setprecision(4)
            << std::setw(14) << r.success_rate << std::setw(18) << r.efficiency_score << std::setw(14) << r.avg_interval
            << std::setw(16) << r.total_attempts << "\n";
    }
    out.unsetf(std::ios::floatfield);
    if (table.relative_improvement && table.point_gap) {
        out << table.rows[0].scheduler_id << " over " << table.rows[1].scheduler_id << ": "
            << std::setprecision(3) << *table.relative_improvement * 100.0 << "% relative, " << *table.point_gap * 100.0
            << " percentage points\n";
    }
}

// Builds the matrix, recording counters beside the cache file.
InterferenceMatrix build_with_cache(const ConceptPool& pool, SimilarityProvider& provider, const fs::path& cache_path,
                                    unsigned jobs, CacheRunStats& stats_out) {
    SimilarityCache cache(cache_path);
    InterferenceMatrix m = build_matrix(pool.concepts, provider, cache, jobs);
    auto s = cache.stats();
    stats_out = CacheRunStats{s.hits, s.misses, provider.calls()};
    if (!cache_path.empty()) write_cache_stats(cache_path, stats_out);
    return m;
}

}  // namespace

std::string git_describe() { return LECTOR_GIT_DESCRIBE; }

ExperimentSpec parse_experiment(const json& j) {
    if (!j.is_object()) throw ConfigError("experiment file must hold a JSON object");
    static const std::set<std::string> known = {"simulation", "scheduler_overrides", "environment_overrides",
                                                "output_dir", "plot", "pool", "semantic_ablation"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown experiment key '" + key + "'");
    }
    ExperimentSpec spec;
    try {
        if (j.contains("simulation")) spec.simulation = j.at("simulation").get<SimulationConfig>();
        if (j.contains("scheduler_overrides")) spec.scheduler_overrides = j.at("scheduler_overrides");
        if (j.contains("environment_overrides")) spec.environment_overrides = j.at("environment_overrides");
        if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("plot")) spec.plot = j.at("plot").get<bool>();
        if (j.contains("pool")) spec.pool_path = fs::path(j.at("pool").get<std::string>());
        if (j.contains("semantic_ablation")) spec.semantic_ablation = j.at("semantic_ablation").get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad experiment file: ") + e.what());
    }
    // Surface bad override keys at load time rather than mid-run.
    SchedulerConstants constants;
    apply_overrides(constants, spec.scheduler_overrides);
    EnvironmentParams env;
    apply_overrides(env, spec.environment_overrides);
    return spec;
}

ExperimentSpec load_experiment(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read experiment file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("experiment file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    ExperimentSpec spec = parse_experiment(j);
    // Relative paths inside the file are resolved against it.
    const fs::path base = path.parent_path();
    if (spec.pool_path && spec.pool_path->is_relative()) spec.pool_path = base / *spec.pool_path;
    if (spec.output_dir.is_relative() && !base.empty()) spec.output_dir = base / spec.output_dir;
    return spec;
}

json to_json(const ExperimentSpec& spec) {
    json j;
    to_json(j["simulation"], spec.simulation);
    j["scheduler_overrides"] = spec.scheduler_overrides;
    j["environment_overrides"] = spec.environment_overrides;
    j["output_dir"] = spec.output_dir.string();
    j["plot"] = spec.plot;
    if (spec.pool_path) j["pool"] = spec.pool_path->string();
    j["semantic_ablation"] = spec.semantic_ablation;
    return j;
}

std::unique_ptr<SimilarityProvider> default_provider(const ConceptPool& pool, ProviderKind kind) {
    if (kind == ProviderKind::Offline) return std::make_unique<OfflineProvider>(pool);
    LlmConfig cfg = LlmConfig::from_env();
    auto client = std::make_shared<LlmClient>(cfg, std::make_unique<HttpLlmTransport>(cfg));
    return std::make_unique<LlmProvider>(client);
}

fs::path cache_path_from_env() {
    const char* v = std::getenv("LECTOR_CACHE_PATH");
    return v ? fs::path(v) : fs::path();
}

fs::path cache_stats_path(const fs::path& cache_path) {
    fs::path p = cache_path;
    p += ".stats.json";
    return p;
}

void write_cache_stats(const fs::path& cache_path, const CacheRunStats& stats) {
    json j = {{"hits", stats.hits}, {"misses", stats.misses}, {"provider_calls", stats.provider_calls}};
    write_file(cache_stats_path(cache_path), j.dump() + "\n");
}

CacheRunStats read_cache_stats(const fs::path& cache_path) {
    CacheRunStats s;
    const fs::path p = cache_stats_path(cache_path);
    if (!fs::exists(p)) return s;
    std::ifstream in(p);
    try {
        json j;
        in >> j;
        s.hits = j.at("hits").get<std::size_t>();
        s.misses = j.at("misses").get<std::size_t>();
        s.provider_calls = j.at("provider_calls").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ConfigError("unreadable cache stats '" + p.string() + "': " + e.what());
    }
    return s;
}

int cmd_simulate(const ExperimentSpec& spec, const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    SimulationConfig cfg = spec.simulation;
    SchedulerConstants constants;
    EnvironmentParams env;
    ConceptPool pool;
    try {
        if (opts.seed) cfg.seed = *opts.seed;
        if (opts.schedulers) cfg.scheduler_ids = *opts.schedulers;
        auto problems = validate_config(cfg);
        if (!problems.empty()) throw ConfigError("invalid simulation config: " + problems.front());
        std::set<SchedulerId> unique(cfg.scheduler_ids.begin(), cfg.scheduler_ids.end());
        if (unique.size() != cfg.scheduler_ids.size()) throw ConfigError("scheduler listed twice");
        apply_overrides(constants, spec.scheduler_overrides);
        apply_overrides(env, spec.environment_overrides);
        pool = spec.pool_path ? load_concept_pool(spec.pool_path->string()) : generate_concepts(cfg, cfg.seed, env);
        std::error_code ec;
        fs::create_directories(spec.output_dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + spec.output_dir.string() + "': " + ec.message());
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    InterferenceMatrix matrix;
    try {
        auto provider = opts.provider_factory(pool, cfg.provider);
        CacheRunStats stats;
        matrix = build_with_cache(pool, *provider, opts.cache_path, opts.jobs, stats);
    } catch (const std::exception& e) {
        if (is_provider_failure(e)) {
            err << "provider failure: " << e.what() << "\n";
            return kExitProvider;
        }
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    const InterferenceMatrix zeros(matrix.concept_ids());
    const SimulationInputs inputs{&pool, &matrix, spec.semantic_ablation ? &zeros : &matrix};

    std::vector<SchedulerReport> reports;
    json hashes = json::object();
    for (SchedulerId id : cfg.scheduler_ids) {
        const std::string name(to_string(id));
        const fs::path csv_path = spec.output_dir / ("events_" + name + ".csv");
        json manifest;
        to_json(manifest["config"], cfg);
        manifest["seed"] = cfg.seed;
        manifest["scheduler"] = name;
        manifest["git_describe"] = git_describe();
        manifest["config_hash"] = config_digest(cfg, env, constants);
        hashes[name] = manifest["config_hash"];
        try {
            Scheduler scheduler(id, constants);
            SimulationResult result = run_simulation(cfg, scheduler, inputs, env, opts.jobs);
            write_file(csv_path, events_to_csv(result.log.events));
            write_file(spec.output_dir / ("events_" + name + ".manifest.json"), manifest.dump(2) + "\n");
            reports.push_back(make_report(name, result.log.events));
        } catch (const SimulationAborted& e) {
            write_file(csv_path, events_to_csv(e.partial_log().events));
            manifest["aborted"] = e.what();
            write_file(spec.output_dir / ("events_" + name + ".manifest.json"), manifest.dump(2) + "\n");
            err << "scheduler error: " << e.what() << "\n";
            return kExitScheduler;
        } catch (const SchedulerError& e) {
            err << "scheduler error (" << name << "): " << e.what() << "\n";
            return kExitScheduler;
        } catch (const ConvergenceError& e) {
            err << "scheduler error (" << name << "): " << e.what() << "\n";
            return kExitScheduler;
        } catch (const NumericError& e) {
            err << "scheduler error (" << name << "): " << e.what() << "\n";
            return kExitScheduler;
        } catch (const Error& e) {
            err << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
    }

    try {
        ComparisonTable table = comparison_table(reports);
        write_file(spec.output_dir / "comparison.csv", reports_to_csv(table.rows));
        write_file(spec.output_dir / "reports.json", reports_to_json(table.rows).dump(2) + "\n");
        write_file(spec.output_dir / "comparison.json", comparison_to_json(table).dump(2) + "\n");

        json manifest;
        manifest["experiment"] = to_json(spec);
        to_json(manifest["config"], cfg);
        manifest["seed"] = cfg.seed;
        json names = json::array();
        for (SchedulerId id : cfg.scheduler_ids) names.push_back(std::string(to_string(id)));
        manifest["schedulers"] = names;
        manifest["scheduler_constants"] = to_json(constants);
        manifest["environment"] = to_json(env);
        manifest["git_describe"] = git_describe();
        manifest["config_hash"] = hashes;
        manifest["created_at"] = utc_timestamp();
        write_file(spec.output_dir / "manifest.json", manifest.dump(2) + "\n");

        if (spec.plot || opts.plot) {
            for (const auto& [stem, svg] : metric_charts(table.rows)) write_file(spec.output_dir / (stem + ".svg"), svg);
        }
        print_table(table, out);
        out << "wrote results to " << spec.output_dir.string() << "\n";
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_matrix(const MatrixOptions& opts, std::ostream& out, std::ostream& err) {
    ConceptPool pool;
    try {
        pool = load_concept_pool(opts.pool_path.string());
        std::error_code ec;
        fs::create_directories(opts.output_dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + opts.output_dir.string() + "': " + ec.message());
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    InterferenceMatrix matrix;
    CacheRunStats stats;
    std::size_t entries = 0;
    try {
        auto provider = opts.provider_factory(pool, opts.provider);
        matrix = build_with_cache(pool, *provider, opts.cache_path, opts.jobs, stats);
        entries = opts.cache_path.empty() ? stats.misses : SimilarityCache::count_entries(opts.cache_path);
    } catch (const std::exception& e) {
        if (is_provider_failure(e)) {
            err << "provider failure: " << e.what() << "\n";
            return kExitProvider;
        }
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    auto top = top_confusable_pairs(matrix, 10);
    try {
        write_file(opts.output_dir / "matrix.csv", matrix_to_csv(matrix));
        std::string listing = "first,second,similarity\n";
        for (const auto& p : top) {
            std::ostringstream line;
            line << p.first << "," << p.second << "," << std::setprecision(17) << p.value << "\n";
            listing += line.str();
        }
        write_file(opts.output_dir / "top_pairs.csv", listing);
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    out << matrix.size() << "x" << matrix.size() << " matrix written to " << (opts.output_dir / "matrix.csv").string()
        << "\n";
    out << "most confusable pairs:\n";
    for (const auto& p : top) {
        out << "  " << p.first << " " << p.second << " " << std::fixed << std::setprecision(4) << p.value << "\n";
    }
    out.unsetf(std::ios::floatfield);
    if (opts.stats) {
        out << "provider calls: " << stats.provider_calls << "\n";
        out << "cache hits: " << stats.hits << "\n";
        out << "cache misses: " << stats.misses << "\n";
        out << "cache entries: " << entries << "\n";
    }
    return kExitOk;
}

int cmd_cache(CacheAction action, const fs::path& cache_path, std::ostream& out, std::ostream& err) {
    if (cache_path.empty()) {
        err << "config error: no cache path configured (set LECTOR_CACHE_PATH)\n";
        return kExitConfig;
    }
    try {
        if (action == CacheAction::Clear) {
            SimilarityCache::count_entries(cache_path);
            if (fs::exists(cache_path)) write_file(cache_path, "");
            std::error_code ec;
            fs::remove(cache_stats_path(cache_path), ec);
            out << "cleared " << cache_path.string() << "\n";
            return kExitOk;
        }
        const std::size_t n = SimilarityCache::count_entries(cache_path);
        const CacheRunStats s = read_cache_stats(cache_path);
        out << n << " entries\n";
        out << "hits: " << s.hits << "\n";
        out << "misses: " << s.misses << "\n";
        out << "provider calls: " << s.provider_calls << "\n";
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

int cmd_pool(const PoolOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        SimulationConfig cfg;
        cfg.n_groups = opts.n_groups;
        ConceptPool pool = generate_concepts(cfg, opts.seed);
        if (opts.output.has_parent_path()) fs::create_directories(opts.output.parent_path());
        write_file(opts.output, pool_to_json(pool).dump(2) + "\n");
        out << pool.concepts.size() << " concepts in " << pool.groups.size() << " groups written to "
            << opts.output.string() << "\n";
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace lector
