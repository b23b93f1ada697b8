#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lector {

using json = nlohmann::json;

using ConceptId = std::string;
using GroupId = std::string;
using LearnerId = std::uint32_t;
using Day = int;

struct Concept {
    ConceptId id;
    std::string term;
    std::string gloss;
    GroupId group_id;
    double difficulty = 0.5;

    bool operator==(const Concept&) const = default;
};

struct SemanticGroup {
    GroupId group_id;
    std::vector<ConceptId> members;
    double base_similarity = 0.0;

    bool operator==(const SemanticGroup&) const = default;
};

// A concept pool as loaded from disk or generated by the simulator.
struct ConceptPool {
    std::vector<Concept> concepts;
    std::vector<SemanticGroup> groups;

    const SemanticGroup* find_group(const GroupId& id) const;
    std::optional<std::size_t> index_of(const ConceptId& id) const;

    bool operator==(const ConceptPool&) const = default;
};

// Per (learner, concept) memory state: difficulty, half-life (days),
// repetition count, mastery and interference. Non-LECTOR schedulers reuse
// the same slots with their own documented meaning (see schedulers.hpp).
struct LearningState {
    double difficulty = 0.5;
    double half_life = 1.0;
    int repetition_count = 0;
    double mastery = 0.0;
    double interference = 0.0;
    std::optional<Day> last_review;

    bool operator==(const LearningState&) const = default;
};

struct LearnerProfile {
    double success_rate = 0.5;
    double learning_speed = 0.5;
    double retention = 0.5;
    double semantic_sensitivity = 0.5;
    double adaptation_rate = 0.2;

    bool operator==(const LearnerProfile&) const = default;
};

enum class SchedulerId { Lector, Sm2, Hlr, Fsrs, Anki, Threshold, SspMmc };

inline constexpr SchedulerId kAllSchedulers[] = {
    SchedulerId::Lector, SchedulerId::Fsrs, SchedulerId::SspMmc, SchedulerId::Threshold,
    SchedulerId::Hlr,    SchedulerId::Anki, SchedulerId::Sm2,
};

// Canonical output names; the simplified variants carry a suffix.
std::string_view to_string(SchedulerId id);
// Accepts canonical names and the short aliases "fsrs", "sspmmc", "ssp-mmc".
SchedulerId parse_scheduler_id(std::string_view name);

struct ReviewEvent {
    LearnerId learner_id = 0;
    ConceptId concept_id;
    Day day = 0;
    double scheduled_interval = 1.0;
    bool success = false;
    double predicted_recall = 1.0;
    SchedulerId scheduler_id = SchedulerId::Lector;

    bool operator==(const ReviewEvent&) const = default;
};

enum class ProviderKind { Offline, Llm };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view name);

struct SimulationConfig {
    int n_learners = 100;
    int n_days = 100;
    int concepts_per_learner = 25;
    int n_groups = 50;
    std::uint64_t seed = 42;
    std::vector<SchedulerId> scheduler_ids{std::begin(kAllSchedulers), std::end(kAllSchedulers)};
    ProviderKind provider = ProviderKind::Offline;
    double min_interval = 1.0;
    double max_interval = 365.0;
    double target_recall = 0.9;

    bool operator==(const SimulationConfig&) const = default;
};

// Members generated per semantic group.
inline constexpr int kGroupSize = 5;

// Empty result means every invariant holds.
std::vector<std::string> validate_state(const LearningState& state);
std::vector<std::string> validate_profile(const LearnerProfile& profile);
std::vector<std::string> validate_config(const SimulationConfig& cfg);
// Checks id uniqueness, difficulty range and group membership.
std::vector<std::string> validate_pool(const ConceptPool& pool);

// min(1, max(0, x)); throws NumericError on NaN or infinity.
double clamp_unit(double x);

// State on first exposure: h = 1 day, no repetitions, no mastery.
LearningState initial_state(double difficulty);

void to_json(json& j, const Concept& c);
void from_json(const json& j, Concept& c);
void to_json(json& j, const SemanticGroup& g);
void from_json(const json& j, SemanticGroup& g);
void to_json(json& j, const LearningState& s);
void from_json(const json& j, LearningState& s);
void to_json(json& j, const LearnerProfile& p);
void from_json(const json& j, LearnerProfile& p);
void to_json(json& j, const ReviewEvent& e);
void from_json(const json& j, ReviewEvent& e);
void to_json(json& j, const SimulationConfig& c);
void from_json(const json& j, SimulationConfig& c);

// Pool file layout:
// {"groups": [{"group_id", "base_similarity", "members": [{"id","term","gloss","difficulty"}]}]}
json pool_to_json(const ConceptPool& pool);
ConceptPool pool_from_json(const json& j);
ConceptPool load_concept_pool(const std::string& path);

}  // namespace lector
