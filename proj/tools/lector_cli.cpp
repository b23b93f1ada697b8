#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lector/errors.hpp"
#include "lector/experiment.hpp"

using namespace lector;

namespace {

std::vector<SchedulerId> parse_scheduler_list(const std::string& csv) {
    std::vector<SchedulerId> ids;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) ids.push_back(parse_scheduler_id(item));
    }
    if (ids.empty()) throw ConfigError("--schedulers needs at least one name");
    return ids;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic-aware spaced repetition simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", git_describe());

    const unsigned default_jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* sim = app.add_subcommand("simulate", "Run an experiment file");
    std::string config_path;
    std::uint64_t seed = 0;
    unsigned sim_jobs = default_jobs;
    std::string schedulers;
    bool plot = false;
    sim->add_option("--config", config_path, "Experiment JSON file")->required();
    auto* seed_opt = sim->add_option("--seed", seed, "Override the configured seed");
    sim->add_option("--jobs", sim_jobs, "Worker threads")->check(CLI::PositiveNumber);
    sim->add_option("--schedulers", schedulers, "Comma-separated scheduler names");
    sim->add_flag("--plot", plot, "Write SVG bar charts");

    auto* mat = app.add_subcommand("matrix", "Build the interference matrix of a concept pool");
    MatrixOptions mopts;
    std::string pool_path;
    std::string provider = "offline";
    std::string out_dir = ".";
    mat->add_option("--pool", pool_path, "Concept pool JSON")->required();
    mat->add_option("--provider", provider, "offline or llm")->check(CLI::IsMember({"offline", "llm"}));
    mat->add_flag("--stats", mopts.stats, "Print provider and cache counters");
    mat->add_option("--output-dir", out_dir, "Where matrix.csv and top_pairs.csv go");
    mat->add_option("--jobs", mopts.jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* cache = app.add_subcommand("cache", "Inspect or clear the similarity cache");
    std::string cache_action;
    cache->add_option("action", cache_action, "stats or clear")->required()->check(CLI::IsMember({"stats", "clear"}));

    auto* pool = app.add_subcommand("pool", "Write a generated concept pool");
    PoolOptions popts;
    std::string pool_out = "pool.json";
    pool->add_option("--groups", popts.n_groups, "Number of semantic groups")->check(CLI::PositiveNumber);
    pool->add_option("--seed", popts.seed, "Generator seed");
    pool->add_option("--output", pool_out, "Output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    if (sim->parsed()) {
        SimulateOptions opts;
        opts.jobs = sim_jobs;
        opts.plot = plot;
        opts.cache_path = cache_path_from_env();
        ExperimentSpec spec;
        try {
            if (*seed_opt) opts.seed = seed;
            if (!schedulers.empty()) opts.schedulers = parse_scheduler_list(schedulers);
            spec = load_experiment(config_path);
        } catch (const Error& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
        return cmd_simulate(spec, opts, std::cout, std::cerr);
    }
    if (mat->parsed()) {
        mopts.pool_path = pool_path;
        mopts.provider = provider == "llm" ? ProviderKind::Llm : ProviderKind::Offline;
        mopts.output_dir = out_dir;
        mopts.cache_path = cache_path_from_env();
        return cmd_matrix(mopts, std::cout, std::cerr);
    }
    if (cache->parsed()) {
        return cmd_cache(cache_action == "clear" ? CacheAction::Clear : CacheAction::Stats, cache_path_from_env(),
                         std::cout, std::cerr);
    }
    if (pool->parsed()) {
        popts.output = pool_out;
        return cmd_pool(popts, std::cout, std::cerr);
    }
    return kExitUsage;
}
