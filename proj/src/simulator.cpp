#include "lector/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace lector {

namespace {

constexpr std::uint64_t kTraitStream = 0x7472616974730001ULL;
constexpr std::uint64_t kPoolStream = 0x706f6f6c00000002ULL;
constexpr std::uint64_t kAssignStream = 0x61737369676e0003ULL;
constexpr std::uint64_t kRecallStream = 0x726563616c6c0004ULL;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(master ^ stream) + index);
}

// Uniform in [0,1) from the top 53 bits.
double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Counter-based draw for the exposure-th review of one concept; depends only
// on the learner's stream, so learners never perturb each other.
double recall_draw(std::uint64_t learner_seed, std::size_t concept_index, int exposure) {
    std::uint64_t h = splitmix64(learner_seed ^ splitmix64(concept_index + 1));
    return unit_from_bits(splitmix64(h + static_cast<std::uint64_t>(exposure)));
}

double beta_sample(std::mt19937_64& rng, double shape) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    double x = gamma(rng);
    double y = gamma(rng);
    return x / (x + y);
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

int id_width(int n) {
    int width = 3;
    for (int limit = 1000; n > limit; limit *= 10) ++width;
    return width;
}

}  // namespace

void apply_overrides(EnvironmentParams& target, const json& overrides) {
    if (overrides.is_null()) return;
    EnvironmentParams env = target;
    if (!overrides.is_object()) throw ConfigError("environment overrides must be an object");
    std::set<std::string> known;
    env.for_each_field([&](const char* name, auto&) { known.insert(name); });
    for (const auto& [key, value] : overrides.items()) {
        if (!known.count(key)) throw ConfigError("unknown environment constant '" + key + "'");
    }
    env.for_each_field([&](const char* name, auto& member) {
        if (!overrides.contains(name)) return;
        try {
            member = overrides.at(name).get<std::decay_t<decltype(member)>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("environment constant '") + name + "': " + e.what());
        }
    });
    if (env.confusion_window < 1) throw ConfigError("confusion_window must be >= 1");
    if (env.introductions_per_day < 1) throw ConfigError("introductions_per_day must be >= 1");
    if (env.max_per_group < 1) throw ConfigError("max_per_group must be >= 1");
    if (!(env.half_life_floor > 0.0)) throw ConfigError("half_life_floor must be positive");
    target = env;
}

json to_json(const EnvironmentParams& env) {
    json j = json::object();
    EnvironmentParams copy = env;
    copy.for_each_field([&](const char* name, auto& member) { j[name] = member; });
    return j;
}

std::vector<Learner> generate_population(const SimulationConfig& cfg, std::uint64_t seed, double adaptation_rate,
                                         const EnvironmentParams& env) {
    std::vector<Learner> learners;
    learners.reserve(static_cast<std::size_t>(std::max(0, cfg.n_learners)));
    for (int i = 0; i < cfg.n_learners; ++i) {
        std::mt19937_64 rng(derive_seed(seed, kTraitStream, static_cast<std::uint64_t>(i)));
        Learner l;
        l.id = static_cast<LearnerId>(i);
        l.traits.ability = beta_sample(rng, env.trait_beta_shape);
        l.traits.speed = beta_sample(rng, env.trait_beta_shape);
        l.traits.base_retention = beta_sample(rng, env.trait_beta_shape);
        l.traits.confusability = beta_sample(rng, env.trait_beta_shape);
        l.profile.adaptation_rate = clamp_unit(adaptation_rate);
        learners.push_back(l);
    }
    return learners;
}

ConceptPool generate_concepts(const SimulationConfig& cfg, std::uint64_t seed, const EnvironmentParams& env) {
    if (cfg.n_groups < 1) throw ConfigError("n_groups must be >= 1");
    static constexpr const char* kSuffixes[kGroupSize] = {"ance", "ing", "ment", "ous", "ify"};
    std::mt19937_64 rng(derive_seed(seed, kPoolStream, 0));
    std::uniform_int_distribution<int> letter(0, 25);
    std::uniform_real_distribution<double> base_sim(env.base_similarity_min, env.base_similarity_max);
    std::uniform_real_distribution<double> difficulty(env.difficulty_min, env.difficulty_max);

    const int width = id_width(cfg.n_groups);
    ConceptPool pool;
    std::unordered_set<std::string> stems;
    for (int g = 0; g < cfg.n_groups; ++g) {
        std::string stem;
        do {
            stem.clear();
            for (int c = 0; c < 5; ++c) stem.push_back(static_cast<char>('a' + letter(rng)));
        } while (!stems.insert(stem).second);

        std::string digits = std::to_string(g);
        SemanticGroup group;
        group.group_id = "g" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') + digits;
        group.base_similarity = base_sim(rng);
        for (int m = 0; m < kGroupSize; ++m) {
            Concept c;
            c.id = group.group_id + "c" + std::to_string(m);
            c.term = stem + kSuffixes[m];
            c.gloss = "synthetic sense " + std::to_string(m + 1) + " of '" + stem + "'";
            c.group_id = group.group_id;
            c.difficulty = difficulty(rng);
            group.members.push_back(c.id);
            pool.concepts.push_back(std::move(c));
        }
        pool.groups.push_back(std::move(group));
    }
    return pool;
}

std::vector<std::size_t> assign_concepts(const ConceptPool& pool, int count, std::uint64_t seed,
                                         const EnvironmentParams& env) {
    if (count < 0) throw ConfigError("concept count must be non-negative");
    if (static_cast<std::size_t>(count) > pool.concepts.size()) {
        throw ConfigError("concepts_per_learner (" + std::to_string(count) + ") exceeds the pool size (" +
                          std::to_string(pool.concepts.size()) + ")");
    }
    std::mt19937_64 rng(seed);
    const std::size_t n_groups = pool.groups.size();
    std::size_t per_group = static_cast<std::size_t>(std::max(1, env.max_per_group));
    if (n_groups > 0 && per_group * n_groups < static_cast<std::size_t>(count)) {
        per_group = (static_cast<std::size_t>(count) + n_groups - 1) / n_groups;
    }

    std::vector<std::size_t> order(n_groups);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::size_t gi = 0; gi < order.size() && out.size() < static_cast<std::size_t>(count); ++gi) {
        std::vector<std::size_t> members;
        for (const ConceptId& id : pool.groups[order[gi]].members) {
            if (auto idx = pool.index_of(id)) members.push_back(*idx);
        }
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t take = std::min({per_group, members.size(), static_cast<std::size_t>(count) - out.size()});
        out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    // Uneven groups may leave a shortfall; top up from any unused concept.
    if (out.size() < static_cast<std::size_t>(count)) {
        std::unordered_set<std::size_t> used(out.begin(), out.end());
        for (std::size_t i = 0; i < pool.concepts.size() && out.size() < static_cast<std::size_t>(count); ++i) {
            if (!used.count(i)) out.push_back(i);
        }
    }
    return out;
}

double recall_probability(const LatentMemory& mem, const LearnerTraits& traits, double dt, double confusion,
                          const EnvironmentParams& env) {
    const double p_max = env.p_max_base + env.p_max_ability * traits.ability;
    const double decay = std::exp(-std::max(0.0, dt) / mem.true_half_life);
    const double penalty = 1.0 - env.confusion_penalty * clamp_unit(confusion) * traits.confusability;
    return clamp_unit(env.p_floor + (p_max - env.p_floor) * decay * penalty);
}

LatentMemory latent_update(const LatentMemory& mem, const LearnerTraits& traits, bool success, double difficulty,
                           const EnvironmentParams& env) {
    LatentMemory out = mem;
    if (success) {
        out.true_half_life = mem.true_half_life * (env.success_growth_base - env.success_growth_difficulty * difficulty) *
                             (env.retention_base + env.retention_weight * traits.base_retention);
    } else {
        out.true_half_life = std::max(env.half_life_floor, mem.true_half_life * env.failure_factor);
    }
    out.exposure_count += 1;
    return out;
}

double confusion_at(const InterferenceMatrix& matrix, std::size_t concept_index, std::span<const RecentReview> recent,
                    Day today, int window) {
    std::vector<std::size_t> active;
    for (const RecentReview& r : recent) {
        const int age = today - r.day;
        if (age >= 1 && age <= window && r.concept_index != concept_index) active.push_back(r.concept_index);
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    return interference_pressure(matrix, concept_index, active);
}

std::string config_digest(const SimulationConfig& cfg, const EnvironmentParams& env, const SchedulerConstants& constants) {
    json j;
    to_json(j["simulation"], cfg);
    j["environment"] = to_json(env);
    j["constants"] = to_json(constants);
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

struct Slot {
    std::size_t pool_index = 0;
    std::size_t matrix_index = 0;
    LearningState state;
    LatentMemory memory;
    ReviewHistory history;
    double pair_difficulty = 0.5;
    Day due = 0;
    bool introduced = false;
};

struct LearnerRun {
    std::vector<ReviewEvent> events;
    std::vector<FinalState> finals;
    LearnerProfile profile;
    std::string error;
};

LearnerRun simulate_learner(const SimulationConfig& cfg, const Scheduler& scheduler, const SimulationInputs& in,
                            const EnvironmentParams& env, const Learner& learner,
                            const std::vector<std::size_t>& assigned) {
    LearnerRun run;
    run.profile = learner.profile;
    const ConceptPool& pool = *in.pool;
    const InterferenceMatrix& env_matrix = *in.environment_matrix;
    const InterferenceMatrix& sched_matrix = in.scheduler_matrix ? *in.scheduler_matrix : env_matrix;
    const std::uint64_t learner_seed = derive_seed(cfg.seed, kRecallStream, learner.id);
    const double offset = env.difficulty_offset_scale * (0.5 - learner.traits.ability);
    const std::size_t window_len = static_cast<std::size_t>(scheduler.constants().lector.recent_window);

    std::vector<Slot> slots;
    slots.reserve(assigned.size());
    for (std::size_t idx : assigned) {
        const Concept& c = pool.concepts[idx];
        Slot s;
        s.pool_index = idx;
        auto mi = env_matrix.index_of(c.id);
        if (!mi || sched_matrix.index_of(c.id) != mi) throw ConfigError("concept " + c.id + " missing from matrix");
        s.matrix_index = *mi;
        s.pair_difficulty = clamp_unit(c.difficulty + offset);
        s.state = initial_state(s.pair_difficulty);
        s.memory.true_half_life = env.initial_half_life_base + env.initial_half_life_speed * learner.traits.speed;
        slots.push_back(s);
    }
    // Review order within a day follows concept id.
    std::vector<std::size_t> by_id(slots.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
        return pool.concepts[slots[a].pool_index].id < pool.concepts[slots[b].pool_index].id;
    });

    std::vector<RecentReview> recent;
    std::deque<RecentMetrics> metrics_window;
    std::size_t next_intro = 0;
    LearnerProfile profile = learner.profile;

    for (Day day = 0; day < cfg.n_days; ++day) {
        for (int k = 0; k < env.introductions_per_day && next_intro < slots.size(); ++k, ++next_intro) {
            slots[next_intro].introduced = true;
            slots[next_intro].due = day;
        }
        std::vector<RecentReview> today;
        for (std::size_t si : by_id) {
            Slot& s = slots[si];
            if (!s.introduced || s.due > day) continue;
            const Concept& c = pool.concepts[s.pool_index];
            const double elapsed = s.state.last_review ? static_cast<double>(day - *s.state.last_review) : 0.0;
            const double env_confusion = confusion_at(env_matrix, s.matrix_index, recent, day, env.confusion_window);
            const double pressure = confusion_at(sched_matrix, s.matrix_index, recent, day, env.confusion_window);

            const double p = recall_probability(s.memory, learner.traits, elapsed, env_confusion, env);
            const bool success = recall_draw(learner_seed, s.pool_index, s.memory.exposure_count) < p;
            s.memory = latent_update(s.memory, learner.traits, success, s.pair_difficulty, env);

            const double predicted = scheduler.predicted_recall(s.state, profile, pressure, elapsed, cfg);
            const double speed = cfg.min_interval / std::max(cfg.min_interval, elapsed);
            metrics_window.push_back({success ? 1.0 : 0.0, clamp_unit(speed), predicted, pressure});
            while (metrics_window.size() > window_len) metrics_window.pop_front();
            RecentMetrics recent_means{0.0, 0.0, 0.0, 0.0};
            for (const RecentMetrics& m : metrics_window) {
                for (std::size_t f = 0; f < 4; ++f) recent_means[f] += m[f];
            }
            for (double& v : recent_means) v = clamp_unit(v / static_cast<double>(metrics_window.size()));

            ReviewContext ctx;
            ctx.day = day;
            ctx.success = success;
            ctx.pressure = pressure;
            ctx.prior = s.history;
            ctx.recent = recent_means;

            SchedulerDecision decision;
            try {
                decision = scheduler.review(s.state, profile, ctx, cfg);
            } catch (const std::exception& e) {
                run.error = std::string(to_string(scheduler.id())) + " failed on learner " + std::to_string(learner.id) +
                            ", concept " + c.id + ", day " + std::to_string(day) + ": " + e.what();
                return run;
            }
            auto problems = validate_state(decision.updated_state);
            if (!problems.empty() || !(decision.next_interval >= cfg.min_interval) ||
                !(decision.next_interval <= cfg.max_interval)) {
                run.error = std::string(to_string(scheduler.id())) + " broke its contract on concept " + c.id + ": " +
                            (problems.empty() ? "interval out of bounds" : problems.front());
                return run;
            }

            s.state = decision.updated_state;
            profile = decision.updated_profile;
            (success ? s.history.right : s.history.wrong) += 1;
            s.due = day + static_cast<Day>(std::max(1L, std::lround(decision.next_interval)));

            run.events.push_back(ReviewEvent{learner.id, c.id, day, decision.next_interval, success, predicted,
                                             scheduler.id()});
            today.push_back({s.matrix_index, day});
        }
        recent.insert(recent.end(), today.begin(), today.end());
        std::erase_if(recent, [&](const RecentReview& r) { return day + 1 - r.day > env.confusion_window; });
    }

    for (const Slot& s : slots) {
        run.finals.push_back(FinalState{learner.id, pool.concepts[s.pool_index].id, s.state, s.memory});
    }
    run.profile = profile;
    return run;
}

bool event_less(const ReviewEvent& a, const ReviewEvent& b) {
    if (a.day != b.day) return a.day < b.day;
    if (a.learner_id != b.learner_id) return a.learner_id < b.learner_id;
    return a.concept_id < b.concept_id;
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& cfg, const Scheduler& scheduler, const SimulationInputs& inputs,
                                const EnvironmentParams& env, unsigned jobs) {
    auto problems = validate_config(cfg);
    if (!problems.empty()) throw ConfigError("invalid simulation config: " + problems.front());
    if (!inputs.pool || !inputs.environment_matrix) throw ConfigError("simulation needs a pool and a matrix");

    SimulationResult result;
    result.learners = generate_population(cfg, cfg.seed, scheduler.constants().lector.lambda, env);
    for (const Learner& l : result.learners) {
        result.assignments.push_back(
            assign_concepts(*inputs.pool, cfg.concepts_per_learner, derive_seed(cfg.seed, kAssignStream, l.id), env));
    }

    std::vector<LearnerRun> runs(result.learners.size());
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(result.learners.size())));
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < runs.size(); i += stride) {
            try {
                runs[i] = simulate_learner(cfg, scheduler, inputs, env, result.learners[i], result.assignments[i]);
            } catch (const std::exception& e) {
                runs[i].error = e.what();
            }
        }
    };
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < jobs; ++w) workers.emplace_back(work, w, jobs);
        for (auto& t : workers) t.join();
    }

    result.log.config_hash = config_digest(cfg, env, scheduler.constants());
    std::string first_error;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        LearnerRun& r = runs[i];
        result.log.events.insert(result.log.events.end(), r.events.begin(), r.events.end());
        result.final_states.insert(result.final_states.end(), r.finals.begin(), r.finals.end());
        result.learners[i].profile = r.profile;
        if (!r.error.empty() && first_error.empty()) first_error = r.error;
    }
    std::stable_sort(result.log.events.begin(), result.log.events.end(), event_less);
    std::stable_sort(result.final_states.begin(), result.final_states.end(), [](const FinalState& a, const FinalState& b) {
        if (a.learner_id != b.learner_id) return a.learner_id < b.learner_id;
        return a.concept_id < b.concept_id;
    });
    if (!first_error.empty()) throw SimulationAborted(first_error, result.log);
    return result;
}

SimulationResult run_offline_simulation(const SimulationConfig& cfg, SchedulerId id, const SchedulerConstants& constants,
                                        const EnvironmentParams& env, unsigned jobs) {
    ConceptPool pool = generate_concepts(cfg, cfg.seed, env);
    OfflineProvider provider(pool);
    SimilarityCache cache;
    InterferenceMatrix matrix = build_matrix(pool.concepts, provider, cache);
    Scheduler scheduler(id, constants);
    return run_simulation(cfg, scheduler, SimulationInputs{&pool, &matrix, &matrix}, env, jobs);
}

std::string events_to_csv(std::span<const ReviewEvent> events) {
    std::string out = "day,learner_id,concept_id,scheduler,interval,predicted_recall,success\n";
    out.reserve(out.size() + events.size() * 64);
    for (const ReviewEvent& e : events) {
        out += std::to_string(e.day);
        out += ',';
        out += std::to_string(e.learner_id);
        out += ',';
        out += e.concept_id;
        out += ',';
        out += to_string(e.scheduler_id);
        out += ',';
        out += format_double(e.scheduled_interval);
        out += ',';
        out += format_double(e.predicted_recall);
        out += ',';
        out += e.success ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<ReviewEvent> events_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "day,learner_id,concept_id,scheduler,interval,predicted_recall,success") {
        throw ConfigError("event CSV has an unexpected header");
    }
    std::vector<ReviewEvent> events;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw ConfigError("event CSV line " + std::to_string(lineno) + " has wrong arity");
        auto num = [&](const std::string& s, auto& value) {
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (ec != std::errc() || ptr != s.data() + s.size()) {
                throw ConfigError("event CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
            }
        };
        ReviewEvent e;
        num(cells[0], e.day);
        num(cells[1], e.learner_id);
        e.concept_id = cells[2];
        e.scheduler_id = parse_scheduler_id(cells[3]);
        num(cells[4], e.scheduled_interval);
        num(cells[5], e.predicted_recall);
        if (cells[6] != "0" && cells[6] != "1") throw ConfigError("event CSV line " + std::to_string(lineno) + ": bad success flag");
        e.success = cells[6] == "1";
        events.push_back(std::move(e));
    }
    return events;
}

}  // namespace lector
