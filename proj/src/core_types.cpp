#include "lector/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "lector/errors.hpp"

namespace lector {

namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

template <typename T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

const SemanticGroup* ConceptPool::find_group(const GroupId& id) const {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const SemanticGroup& g) { return g.group_id == id; });
    return it == groups.end() ? nullptr : &*it;
}

std::optional<std::size_t> ConceptPool::index_of(const ConceptId& id) const {
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (concepts[i].id == id) return i;
    }
    return std::nullopt;
}

std::string_view to_string(SchedulerId id) {
    switch (id) {
        case SchedulerId::Lector: return "lector";
        case SchedulerId::Sm2: return "sm2";
        case SchedulerId::Hlr: return "hlr";
        case SchedulerId::Fsrs: return "fsrs-simplified";
        case SchedulerId::Anki: return "anki";
        case SchedulerId::Threshold: return "threshold";
        case SchedulerId::SspMmc: return "sspmmc-simplified";
    }
    return "unknown";
}

SchedulerId parse_scheduler_id(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (SchedulerId id : kAllSchedulers) {
        if (lower == to_string(id)) return id;
    }
    if (lower == "fsrs") return SchedulerId::Fsrs;
    if (lower == "sspmmc" || lower == "ssp-mmc") return SchedulerId::SspMmc;
    throw ConfigError("unknown scheduler '" + std::string(name) + "'");
}

std::string_view to_string(ProviderKind kind) { return kind == ProviderKind::Offline ? "offline" : "llm"; }

ProviderKind parse_provider_kind(std::string_view name) {
    if (name == "offline") return ProviderKind::Offline;
    if (name == "llm") return ProviderKind::Llm;
    throw ConfigError("unknown provider '" + std::string(name) + "'");
}

std::vector<std::string> validate_state(const LearningState& s) {
    std::vector<std::string> out;
    if (!in_unit(s.difficulty)) out.emplace_back("d in [0,1] violated");
    if (!(std::isfinite(s.half_life) && s.half_life > 0.0)) out.emplace_back("h > 0 violated");
    if (s.repetition_count < 0) out.emplace_back("rho >= 0 violated");
    if (!in_unit(s.mastery)) out.emplace_back("mu in [0,1] violated");
    if (!in_unit(s.interference)) out.emplace_back("sigma in [0,1] violated");
    if ((s.repetition_count == 0) != !s.last_review.has_value()) {
        out.emplace_back("rho=0 iff last_review none violated");
    }
    if (s.last_review && *s.last_review < 0) out.emplace_back("last_review >= 0 violated");
    return out;
}

std::vector<std::string> validate_profile(const LearnerProfile& p) {
    std::vector<std::string> out;
    if (!in_unit(p.success_rate)) out.emplace_back("success_rate in [0,1] violated");
    if (!in_unit(p.learning_speed)) out.emplace_back("learning_speed in [0,1] violated");
    if (!in_unit(p.retention)) out.emplace_back("retention in [0,1] violated");
    if (!in_unit(p.semantic_sensitivity)) out.emplace_back("semantic_sensitivity in [0,1] violated");
    if (!in_unit(p.adaptation_rate)) out.emplace_back("adaptation_rate in [0,1] violated");
    return out;
}

std::vector<std::string> validate_config(const SimulationConfig& c) {
    std::vector<std::string> out;
    if (c.n_learners < 1) out.emplace_back("n_learners must be positive");
    if (c.n_days < 1) out.emplace_back("n_days must be positive");
    if (c.concepts_per_learner < 1) out.emplace_back("concepts_per_learner must be positive");
    if (c.n_groups < 1) out.emplace_back("n_groups must be positive");
    if (c.n_groups >= 1 && c.concepts_per_learner > c.n_groups * kGroupSize) {
        out.emplace_back("concepts_per_learner exceeds n_groups x group size");
    }
    if (!(c.min_interval > 0.0)) out.emplace_back("min_interval must be positive");
    if (!(c.min_interval <= c.max_interval)) out.emplace_back("min_interval <= max_interval violated");
    if (!(c.target_recall > 0.0 && c.target_recall < 1.0)) out.emplace_back("target_recall in (0,1) violated");
    if (c.scheduler_ids.empty()) out.emplace_back("scheduler_ids must not be empty");
    std::set<SchedulerId> seen(c.scheduler_ids.begin(), c.scheduler_ids.end());
    if (seen.size() != c.scheduler_ids.size()) out.emplace_back("scheduler_ids contains duplicates");
    return out;
}

std::vector<std::string> validate_pool(const ConceptPool& pool) {
    std::vector<std::string> out;
    std::unordered_set<ConceptId> ids;
    for (const Concept& c : pool.concepts) {
        if (!ids.insert(c.id).second) out.push_back("duplicate concept id " + c.id);
        if (!in_unit(c.difficulty)) out.push_back("difficulty out of [0,1] for " + c.id);
        if (pool.find_group(c.group_id) == nullptr) out.push_back("unknown group " + c.group_id + " for " + c.id);
    }
    std::unordered_set<GroupId> group_ids;
    for (const SemanticGroup& g : pool.groups) {
        if (!group_ids.insert(g.group_id).second) out.push_back("duplicate group id " + g.group_id);
        if (g.members.empty()) out.push_back("group " + g.group_id + " has no members");
        std::unordered_set<ConceptId> members(g.members.begin(), g.members.end());
        if (members.size() != g.members.size()) out.push_back("group " + g.group_id + " has duplicate members");
        if (!in_unit(g.base_similarity)) out.push_back("base_similarity out of [0,1] for " + g.group_id);
    }
    return out;
}

double clamp_unit(double x) {
    if (!std::isfinite(x)) throw NumericError("clamp_unit: non-finite input");
    return std::min(1.0, std::max(0.0, x));
}

LearningState initial_state(double difficulty) {
    LearningState s;
    s.difficulty = clamp_unit(difficulty);
    return s;
}

void to_json(json& j, const Concept& c) {
    j = json{{"id", c.id}, {"term", c.term}, {"gloss", c.gloss}, {"group_id", c.group_id}, {"difficulty", c.difficulty}};
}

void from_json(const json& j, Concept& c) {
    c.id = required<std::string>(j, "id");
    c.term = required<std::string>(j, "term");
    c.gloss = j.value("gloss", std::string{});
    c.group_id = j.value("group_id", std::string{});
    c.difficulty = required<double>(j, "difficulty");
}

void to_json(json& j, const SemanticGroup& g) {
    j = json{{"group_id", g.group_id}, {"members", g.members}, {"base_similarity", g.base_similarity}};
}

void from_json(const json& j, SemanticGroup& g) {
    g.group_id = required<std::string>(j, "group_id");
    g.members = required<std::vector<std::string>>(j, "members");
    g.base_similarity = required<double>(j, "base_similarity");
}

void to_json(json& j, const LearningState& s) {
    j = json{{"difficulty", s.difficulty},
             {"half_life", s.half_life},
             {"repetition_count", s.repetition_count},
             {"mastery", s.mastery},
             {"interference", s.interference},
             {"last_review", s.last_review ? json(*s.last_review) : json(nullptr)}};
}

void from_json(const json& j, LearningState& s) {
    s.difficulty = required<double>(j, "difficulty");
    s.half_life = required<double>(j, "half_life");
    s.repetition_count = required<int>(j, "repetition_count");
    s.mastery = required<double>(j, "mastery");
    s.interference = required<double>(j, "interference");
    const json& lr = j.contains("last_review") ? j.at("last_review") : json(nullptr);
    s.last_review = lr.is_null() ? std::nullopt : std::optional<Day>(lr.get<Day>());
}

void to_json(json& j, const LearnerProfile& p) {
    j = json{{"success_rate", p.success_rate},
             {"learning_speed", p.learning_speed},
             {"retention", p.retention},
             {"semantic_sensitivity", p.semantic_sensitivity},
             {"adaptation_rate", p.adaptation_rate}};
}

void from_json(const json& j, LearnerProfile& p) {
    p.success_rate = required<double>(j, "success_rate");
    p.learning_speed = required<double>(j, "learning_speed");
    p.retention = required<double>(j, "retention");
    p.semantic_sensitivity = required<double>(j, "semantic_sensitivity");
    p.adaptation_rate = required<double>(j, "adaptation_rate");
}

void to_json(json& j, const ReviewEvent& e) {
    j = json{{"learner_id", e.learner_id},
             {"concept_id", e.concept_id},
             {"day", e.day},
             {"scheduled_interval", e.scheduled_interval},
             {"success", e.success},
             {"predicted_recall", e.predicted_recall},
             {"scheduler_id", std::string(to_string(e.scheduler_id))}};
}

void from_json(const json& j, ReviewEvent& e) {
    e.learner_id = required<LearnerId>(j, "learner_id");
    e.concept_id = required<std::string>(j, "concept_id");
    e.day = required<Day>(j, "day");
    e.scheduled_interval = required<double>(j, "scheduled_interval");
    e.success = required<bool>(j, "success");
    e.predicted_recall = required<double>(j, "predicted_recall");
    e.scheduler_id = parse_scheduler_id(required<std::string>(j, "scheduler_id"));
}

void to_json(json& j, const SimulationConfig& c) {
    json ids = json::array();
    for (SchedulerId id : c.scheduler_ids) ids.push_back(std::string(to_string(id)));
    j = json{{"n_learners", c.n_learners},
             {"n_days", c.n_days},
             {"concepts_per_learner", c.concepts_per_learner},
             {"n_groups", c.n_groups},
             {"seed", c.seed},
             {"scheduler_ids", ids},
             {"provider", std::string(to_string(c.provider))},
             {"min_interval", c.min_interval},
             {"max_interval", c.max_interval},
             {"target_recall", c.target_recall}};
}

// Every field is optional; absent fields keep their defaults.
void from_json(const json& j, SimulationConfig& c) {
    static const std::set<std::string> known = {"n_learners", "n_days",       "concepts_per_learner",
                                                "n_groups",   "seed",         "scheduler_ids",
                                                "provider",   "min_interval", "max_interval",
                                                "target_recall"};
    if (!j.is_object()) throw ConfigError("simulation config must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown simulation field '" + key + "'");
    }
    try {
        c.n_learners = j.value("n_learners", c.n_learners);
        c.n_days = j.value("n_days", c.n_days);
        c.concepts_per_learner = j.value("concepts_per_learner", c.concepts_per_learner);
        c.n_groups = j.value("n_groups", c.n_groups);
        c.seed = j.value("seed", c.seed);
        c.min_interval = j.value("min_interval", c.min_interval);
        c.max_interval = j.value("max_interval", c.max_interval);
        c.target_recall = j.value("target_recall", c.target_recall);
        if (j.contains("provider")) c.provider = parse_provider_kind(j.at("provider").get<std::string>());
        if (j.contains("scheduler_ids")) {
            c.scheduler_ids.clear();
            for (const auto& name : j.at("scheduler_ids")) c.scheduler_ids.push_back(parse_scheduler_id(name.get<std::string>()));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("simulation config: ") + e.what());
    }
}

json pool_to_json(const ConceptPool& pool) {
    json groups = json::array();
    for (const SemanticGroup& g : pool.groups) {
        json members = json::array();
        for (const ConceptId& id : g.members) {
            auto idx = pool.index_of(id);
            if (!idx) continue;
            const Concept& c = pool.concepts[*idx];
            members.push_back({{"id", c.id}, {"term", c.term}, {"gloss", c.gloss}, {"difficulty", c.difficulty}});
        }
        groups.push_back({{"group_id", g.group_id}, {"base_similarity", g.base_similarity}, {"members", members}});
    }
    return json{{"groups", groups}};
}

ConceptPool pool_from_json(const json& j) {
    if (!j.is_object() || !j.contains("groups") || !j.at("groups").is_array()) {
        throw ConfigError("concept pool must be an object with a 'groups' array");
    }
    ConceptPool pool;
    for (const json& gj : j.at("groups")) {
        SemanticGroup g;
        g.group_id = required<std::string>(gj, "group_id");
        g.base_similarity = required<double>(gj, "base_similarity");
        if (!gj.contains("members") || !gj.at("members").is_array()) {
            throw ConfigError("group '" + g.group_id + "' lacks a members array");
        }
        for (const json& mj : gj.at("members")) {
            Concept c = mj.get<Concept>();
            c.group_id = g.group_id;
            g.members.push_back(c.id);
            pool.concepts.push_back(std::move(c));
        }
        pool.groups.push_back(std::move(g));
    }
    auto problems = validate_pool(pool);
    if (!problems.empty()) throw ConfigError("invalid concept pool: " + problems.front());
    return pool;
}

ConceptPool load_concept_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open concept pool '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("concept pool '" + path + "' is not valid JSON: " + e.what());
    }
    return pool_from_json(j);
}

}  // namespace lector
