#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lector/core_types.hpp"
#include "lector/errors.hpp"
#include "lector/schedulers.hpp"
#include "lector/semantic.hpp"

namespace lector {

// Ground-truth memory of one (learner, concept) pair.
struct LatentMemory {
    double true_half_life = 1.0;
    int exposure_count = 0;
};

struct LearnerTraits {
    double ability = 0.5;
    double speed = 0.5;
    double base_retention = 0.5;
    double confusability = 0.5;
};

struct Learner {
    LearnerId id = 0;
    LearnerTraits traits;
    LearnerProfile profile;
};

// Constants of the synthetic learner environment. Every field can be
// overridden from the experiment file under "environment_overrides".
struct EnvironmentParams {
    double p_floor = 0.05;
    double p_max_base = 0.6;
    double p_max_ability = 0.38;
    double confusion_penalty = 0.4;
    double success_growth_base = 1.8;
    double success_growth_difficulty = 0.6;
    double retention_base = 0.8;
    double retention_weight = 0.4;
    double failure_factor = 0.6;
    double half_life_floor = 0.5;
    // First-exposure latent half-life = base + speed_weight * traits.speed.
    double initial_half_life_base = 2.0;
    double initial_half_life_speed = 6.0;
    // Pair difficulty = concept difficulty + scale * (0.5 - ability).
    double difficulty_offset_scale = 0.4;
    int confusion_window = 3;
    int introductions_per_day = 5;
    int max_per_group = 2;
    double base_similarity_min = 0.5;
    double base_similarity_max = 0.9;
    double difficulty_min = 0.2;
    double difficulty_max = 0.8;
    double trait_beta_shape = 4.0;

    template <typename F>
    void for_each_field(F&& f) {
        f("p_floor", p_floor);
        f("p_max_base", p_max_base);
        f("p_max_ability", p_max_ability);
        f("confusion_penalty", confusion_penalty);
        f("success_growth_base", success_growth_base);
        f("success_growth_difficulty", success_growth_difficulty);
        f("retention_base", retention_base);
        f("retention_weight", retention_weight);
        f("failure_factor", failure_factor);
        f("half_life_floor", half_life_floor);
        f("initial_half_life_base", initial_half_life_base);
        f("initial_half_life_speed", initial_half_life_speed);
        f("difficulty_offset_scale", difficulty_offset_scale);
        f("confusion_window", confusion_window);
        f("introductions_per_day", introductions_per_day);
        f("max_per_group", max_per_group);
        f("base_similarity_min", base_similarity_min);
        f("base_similarity_max", base_similarity_max);
        f("difficulty_min", difficulty_min);
        f("difficulty_max", difficulty_max);
        f("trait_beta_shape", trait_beta_shape);
    }
};

// Unknown keys or invalid values throw ConfigError and leave `env` unchanged.
void apply_overrides(EnvironmentParams& env, const json& overrides);
json to_json(const EnvironmentParams& env);

struct EventLog {
    std::vector<ReviewEvent> events;  // sorted by (day, learner_id, concept_id)
    std::string config_hash;
};

// Traits ~ Beta(4,4) per field; profile fields start at 0.5.
std::vector<Learner> generate_population(const SimulationConfig& cfg, std::uint64_t seed, double adaptation_rate,
                                         const EnvironmentParams& env = {});

// n_groups groups of kGroupSize concepts sharing a random 5-letter stem.
ConceptPool generate_concepts(const SimulationConfig& cfg, std::uint64_t seed, const EnvironmentParams& env = {});

// Concept indices for one learner: whole groups up to env.max_per_group
// members each (more only if the request cannot otherwise be met), with
// group-mates adjacent. Throws ConfigError when the pool is too small.
std::vector<std::size_t> assign_concepts(const ConceptPool& pool, int count, std::uint64_t seed,
                                         const EnvironmentParams& env = {});

double recall_probability(const LatentMemory& mem, const LearnerTraits& traits, double dt, double confusion,
                          const EnvironmentParams& env = {});

LatentMemory latent_update(const LatentMemory& mem, const LearnerTraits& traits, bool success, double difficulty,
                           const EnvironmentParams& env = {});

struct RecentReview {
    std::size_t concept_index = 0;  // index into the interference matrix
    Day day = 0;
};

// Pressure from concepts reviewed on days [today - window, today - 1].
double confusion_at(const InterferenceMatrix& matrix, std::size_t concept_index, std::span<const RecentReview> recent,
                    Day today, int window);

struct FinalState {
    LearnerId learner_id = 0;
    ConceptId concept_id;
    LearningState state;
    LatentMemory memory;
};

struct SimulationResult {
    EventLog log;
    std::vector<FinalState> final_states;  // sorted by (learner_id, concept_id)
    std::vector<Learner> learners;         // with final profiles
    std::vector<std::vector<std::size_t>> assignments;
};

// A scheduler failure during run_simulation; carries the events logged so far.
class SimulationAborted : public SchedulerError {
public:
    SimulationAborted(const std::string& what, EventLog partial) : SchedulerError(what), partial_(std::move(partial)) {}
    const EventLog& partial_log() const noexcept { return partial_; }

private:
    EventLog partial_;
};

struct SimulationInputs {
    const ConceptPool* pool = nullptr;
    // Drives the environment's confusion penalty.
    const InterferenceMatrix* environment_matrix = nullptr;
    // What the scheduler sees; defaults to the environment matrix.
    const InterferenceMatrix* scheduler_matrix = nullptr;
};

// FNV-1a over the canonical JSON of the config, environment and constants.
std::string config_digest(const SimulationConfig& cfg, const EnvironmentParams& env, const SchedulerConstants& constants);

// Day loop for every learner; learners are spread over `jobs` workers and
// the merged log is identical for any jobs >= 1.
SimulationResult run_simulation(const SimulationConfig& cfg, const Scheduler& scheduler, const SimulationInputs& inputs,
                                const EnvironmentParams& env = {}, unsigned jobs = 1);

// Convenience wrapper: generates the pool, builds the offline matrix and runs.
SimulationResult run_offline_simulation(const SimulationConfig& cfg, SchedulerId id,
                                        const SchedulerConstants& constants = {}, const EnvironmentParams& env = {},
                                        unsigned jobs = 1);

// Header: day,learner_id,concept_id,scheduler,interval,predicted_recall,success
std::string events_to_csv(std::span<const ReviewEvent> events);
std::vector<ReviewEvent> events_from_csv(const std::string& csv);

}  // namespace lector
