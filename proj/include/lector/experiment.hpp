#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lector/core_types.hpp"
#include "lector/semantic.hpp"

namespace lector {

// Stable process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitProvider = 3,
    kExitScheduler = 4,
};

// One experiment file:
// {"simulation": {...}, "scheduler_overrides": {...}, "environment_overrides": {...},
//  "output_dir": "results", "plot": false, "pool": "pool.json", "semantic_ablation": false}
struct ExperimentSpec {
    SimulationConfig simulation;
    json scheduler_overrides = json::object();
    json environment_overrides = json::object();
    std::filesystem::path output_dir = "results";
    bool plot = false;
    // Load concepts from this file instead of generating n_groups groups.
    std::optional<std::filesystem::path> pool_path;
    // Schedulers see an all-zero interference matrix; the environment keeps the real one.
    bool semantic_ablation = false;
};

// ConfigError on unknown keys, bad types or unknown scheduler names.
ExperimentSpec parse_experiment(const json& j);
ExperimentSpec load_experiment(const std::filesystem::path& path);
json to_json(const ExperimentSpec& spec);

using ProviderFactory = std::function<std::unique_ptr<SimilarityProvider>(const ConceptPool&, ProviderKind)>;

// Offline provider, or an HTTP-backed LLM provider configured from the environment.
std::unique_ptr<SimilarityProvider> default_provider(const ConceptPool& pool, ProviderKind kind);

// Cache location from LECTOR_CACHE_PATH; empty when unset.
std::filesystem::path cache_path_from_env();

// Counters of the last run, kept next to the cache file as <cache>.stats.json.
struct CacheRunStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t provider_calls = 0;
};
std::filesystem::path cache_stats_path(const std::filesystem::path& cache_path);
void write_cache_stats(const std::filesystem::path& cache_path, const CacheRunStats& stats);
CacheRunStats read_cache_stats(const std::filesystem::path& cache_path);

struct SimulateOptions {
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::optional<std::vector<SchedulerId>> schedulers;
    bool plot = false;  // or-ed with the spec's flag
    std::filesystem::path cache_path;
    ProviderFactory provider_factory = default_provider;
};

int cmd_simulate(const ExperimentSpec& spec, const SimulateOptions& opts, std::ostream& out, std::ostream& err);

struct MatrixOptions {
    std::filesystem::path pool_path;
    ProviderKind provider = ProviderKind::Offline;
    bool stats = false;
    std::filesystem::path output_dir = ".";
    std::filesystem::path cache_path;
    unsigned jobs = 1;
    ProviderFactory provider_factory = default_provider;
};

int cmd_matrix(const MatrixOptions& opts, std::ostream& out, std::ostream& err);

enum class CacheAction { Stats, Clear };
int cmd_cache(CacheAction action, const std::filesystem::path& cache_path, std::ostream& out, std::ostream& err);

struct PoolOptions {
    int n_groups = 50;
    std::uint64_t seed = 42;
    std::filesystem::path output = "pool.json";
};

// Writes a generated concept pool as JSON.
int cmd_pool(const PoolOptions& opts, std::ostream& out, std::ostream& err);

std::string git_describe();

}  // namespace lector
