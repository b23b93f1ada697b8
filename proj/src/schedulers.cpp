#include "lector/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lector/errors.hpp"

namespace lector {

namespace {

template <typename T>
void merge_section(T& target, const json& overrides, const std::string& section) {
    if (!overrides.is_object()) throw ConfigError("overrides for '" + section + "' must be an object");
    std::set<std::string> known;
    target.for_each_field([&](const char* name, auto&) { known.insert(name); });
    for (const auto& [key, value] : overrides.items()) {
        if (!known.count(key)) throw ConfigError("unknown constant '" + section + "." + key + "'");
    }
    target.for_each_field([&](const char* name, auto& member) {
        if (!overrides.contains(name)) return;
        try {
            member = overrides.at(name).get<std::decay_t<decltype(member)>>();
        } catch (const json::exception& e) {
            throw ConfigError("constant '" + section + "." + name + "': " + e.what());
        }
    });
}

template <typename T>
json dump_section(T section) {
    json j = json::object();
    section.for_each_field([&](const char* name, auto& member) { j[name] = member; });
    return j;
}

LearningState reviewed(LearningState s, Day day) {
    s.repetition_count += 1;
    s.last_review = day;
    return s;
}

double encode_ease(double ease, double floor) { return clamp_unit(1.0 - floor / ease); }
double decode_ease(double mastery, double floor) { return floor / (1.0 - std::min(mastery, 1.0 - 1e-12)); }
double encode_streak(int n) { return std::min(n, 2) / 2.0; }
int decode_streak(double sigma) { return static_cast<int>(std::lround(sigma * 2.0)); }

}  // namespace

void apply_overrides(SchedulerConstants& target, const json& overrides) {
    if (overrides.is_null()) return;
    SchedulerConstants c = target;
    if (!overrides.is_object()) throw ConfigError("scheduler overrides must be an object");
    for (const auto& [key, value] : overrides.items()) {
        if (key == "lector") merge_section(c.lector, value, key);
        else if (key == "sm2") merge_section(c.sm2, value, key);
        else if (key == "hlr") merge_section(c.hlr, value, key);
        else if (key == "fsrs") merge_section(c.fsrs, value, key);
        else if (key == "anki") merge_section(c.anki, value, key);
        else if (key == "threshold") merge_section(c.threshold, value, key);
        else if (key == "sspmmc") merge_section(c.sspmmc, value, key);
        else throw ConfigError("unknown scheduler section '" + key + "'");
    }
    if (!(c.lector.lambda >= 0.0 && c.lector.lambda <= 1.0)) throw ConfigError("lector.lambda must lie in [0,1]");
    if (c.lector.recent_window < 1) throw ConfigError("lector.recent_window must be positive");
    if (!(c.threshold.recall_threshold > 0.0 && c.threshold.recall_threshold < 1.0)) {
        throw ConfigError("threshold.recall_threshold must lie in (0,1)");
    }
    if (!(c.sm2.ease_floor > 0.0) || !(c.anki.ease_floor > 0.0)) throw ConfigError("ease floors must be positive");
    target = std::move(c);
}

json to_json(const SchedulerConstants& c) {
    return json{{"lector", dump_section(c.lector)}, {"sm2", dump_section(c.sm2)},
                {"hlr", dump_section(c.hlr)},       {"fsrs", dump_section(c.fsrs)},
                {"anki", dump_section(c.anki)},     {"threshold", dump_section(c.threshold)},
                {"sspmmc", dump_section(c.sspmmc)}};
}

double clamp_interval(double interval, const SimulationConfig& cfg) {
    if (std::isnan(interval)) throw SchedulerError("interval is NaN");
    return std::min(cfg.max_interval, std::max(cfg.min_interval, interval));
}

// --- LECTOR -------------------------------------------------------------------

double lector_retention(double dt, const RetentionParams& p) {
    if (dt < 0.0) throw SchedulerError("lector_retention: negative elapsed time");
    return std::exp(-dt / p.effective_half_life());
}

RetentionParams lector_params(const LearningState& state, const LearnerProfile& profile, double pressure,
                              const LectorConstants& k) {
    RetentionParams p;
    p.tau = state.half_life * (1.0 + state.mastery);
    p.alpha = std::max(k.alpha_floor, 1.0 - k.kappa_sem * pressure * profile.semantic_sensitivity);
    p.alpha = std::min(1.0, p.alpha);
    p.beta = k.beta_offset + profile.retention;
    return p;
}

std::pair<double, IntervalFactors> lector_interval(const LearningState& state, const LearnerProfile& profile,
                                                   double pressure, const SimulationConfig& cfg,
                                                   const LectorConstants& k) {
    const RetentionParams p = lector_params(state, profile, pressure, k);
    IntervalFactors f;
    f.base = -std::log(cfg.target_recall) * p.effective_half_life();
    f.semantic = 1.0 - k.semantic_weight * pressure;
    f.mastery = k.mastery_offset + state.mastery;
    f.repetition = std::min(1.0 + k.repetition_step * state.repetition_count, k.repetition_cap);
    f.personal = k.speed_offset + profile.learning_speed;
    return {clamp_interval(f.product(), cfg), f};
}

LearnerProfile update_profile(const LearnerProfile& profile, const RecentMetrics& recent) {
    for (double r : recent) {
        if (!(r >= 0.0 && r <= 1.0)) throw SchedulerError("update_profile: recent metric outside [0,1]");
    }
    const double lambda = profile.adaptation_rate;
    auto ema = [&](double old, double now) { return clamp_unit((1.0 - lambda) * old + lambda * now); };
    LearnerProfile out = profile;
    out.success_rate = ema(profile.success_rate, recent[0]);
    out.learning_speed = ema(profile.learning_speed, recent[1]);
    out.retention = ema(profile.retention, recent[2]);
    out.semantic_sensitivity = ema(profile.semantic_sensitivity, recent[3]);
    return out;
}

SchedulerDecision lector_update(const LearningState& state, const LearnerProfile& profile, bool success,
                                double pressure, const RecentMetrics& recent, Day day, const SimulationConfig& cfg,
                                const LectorConstants& k) {
    pressure = clamp_unit(pressure);
    LearningState next = reviewed(state, day);
    if (success) {
        next.half_life = state.half_life * (k.growth_base + k.growth_mastery * state.mastery);
        next.mastery = clamp_unit(state.mastery + k.mastery_gain * (1.0 - state.mastery));
    } else {
        next.half_life = std::max(k.half_life_floor, state.half_life * k.failure_factor);
        next.mastery = clamp_unit(state.mastery * k.mastery_decay);
    }
    next.interference = pressure;

    SchedulerDecision d;
    d.updated_state = next;
    d.updated_profile = update_profile(profile, recent);
    auto [interval, factors] = lector_interval(next, d.updated_profile, pressure, cfg, k);
    const RetentionParams p = lector_params(next, d.updated_profile, pressure, k);
    d.next_interval = interval;
    d.diagnostics = {{"tau", p.tau},        {"alpha", p.alpha},           {"beta", p.beta},
                     {"I_base", factors.base}, {"F1_semantic", factors.semantic}, {"F2_mastery", factors.mastery},
                     {"F3_repetition", factors.repetition}, {"F4_personal", factors.personal}};
    return d;
}

// --- SM-2 ---------------------------------------------------------------------

double sm2_ease(const LearningState& state, const Sm2Constants& k) {
    return state.repetition_count == 0 ? k.ease_initial : decode_ease(state.mastery, k.ease_floor);
}

SchedulerDecision sm2_update(const LearningState& state, int q, Day day, const SimulationConfig& cfg,
                             const Sm2Constants& k) {
    if (q < 0 || q > 5) throw SchedulerError("sm2_update: quality must lie in 0..5");
    const double ease = sm2_ease(state, k);
    int streak = state.repetition_count == 0 ? 0 : decode_streak(state.interference);
    double interval = 0.0;
    if (q >= 3) {
        if (streak == 0) interval = k.first_interval;
        else if (streak == 1) interval = k.second_interval;
        else interval = state.half_life * ease;
        ++streak;
    } else {
        streak = 0;
        interval = k.first_interval;
    }
    const double miss = 5 - q;
    const double new_ease = std::max(k.ease_floor, ease + 0.1 - miss * (0.08 + miss * 0.02));
    interval = clamp_interval(interval, cfg);

    SchedulerDecision d;
    d.updated_state = reviewed(state, day);
    d.updated_state.half_life = interval;
    d.updated_state.mastery = encode_ease(new_ease, k.ease_floor);
    d.updated_state.interference = encode_streak(streak);
    d.next_interval = interval;
    d.diagnostics = {{"ease", new_ease}, {"streak", static_cast<double>(streak)}};
    return d;
}

// --- HLR ----------------------------------------------------------------------

double hlr_half_life(const ReviewHistory& h, const HlrConstants& k) {
    const double x = k.theta_right * std::sqrt(1.0 + h.right) + k.theta_wrong * std::sqrt(1.0 + h.wrong) + k.theta_bias;
    return std::exp2(x);
}

SchedulerDecision hlr_update(const LearningState& state, bool success, const ReviewHistory& prior, Day day,
                             const SimulationConfig& cfg, const HlrConstants& k) {
    if (prior.right < 0 || prior.wrong < 0) throw SchedulerError("hlr_update: negative history counts");
    ReviewHistory post = prior;
    (success ? post.right : post.wrong) += 1;
    const double half_life = hlr_half_life(post, k);
    const double interval = clamp_interval(-half_life * std::log2(cfg.target_recall), cfg);

    SchedulerDecision d;
    d.updated_state = reviewed(state, day);
    d.updated_state.half_life = half_life;
    d.updated_state.mastery = clamp_unit(static_cast<double>(post.right) / (post.right + post.wrong));
    d.next_interval = interval;
    d.diagnostics = {{"half_life", half_life},
                     {"right", static_cast<double>(post.right)},
                     {"wrong", static_cast<double>(post.wrong)}};
    return d;
}

// --- FSRS (simplified two-parameter variant) ------------------------------------

SchedulerDecision fsrs_update(const LearningState& state, int rating, Day day, const SimulationConfig& cfg,
                              const FsrsConstants& k) {
    if (rating < 1 || rating > 4) throw SchedulerError("fsrs_update: rating must lie in 1..4");
    const double s = state.half_life;
    const double difficulty = state.difficulty;
    double stability = 0.0;
    if (rating >= 2) {
        const double growth = std::exp(0.5) * (11.0 - 10.0 * difficulty) * std::pow(s, -k.stability_decay) *
                              k.growth_scale * (rating - 2.5 + 1.0);
        stability = s * (1.0 + growth);
    } else {
        stability = std::max(k.stability_floor, k.lapse_scale * std::pow(s, k.lapse_power));
    }
    const double new_difficulty = clamp_unit(difficulty + k.difficulty_step * (3 - rating) / 2.0);
    const double interval = clamp_interval(stability * std::log(cfg.target_recall) / std::log(0.9), cfg);

    SchedulerDecision d;
    d.updated_state = reviewed(state, day);
    d.updated_state.half_life = stability;
    d.updated_state.difficulty = new_difficulty;
    d.next_interval = interval;
    d.diagnostics = {{"stability", stability}, {"difficulty", new_difficulty}};
    return d;
}

// --- ANKI -----------------------------------------------------------------------

double anki_ease(const LearningState& state, const AnkiConstants& k) {
    return state.repetition_count == 0 ? k.ease_initial : decode_ease(state.mastery, k.ease_floor);
}

SchedulerDecision anki_update(const LearningState& state, bool success, Day day, const SimulationConfig& cfg,
                              const AnkiConstants& k) {
    double ease = anki_ease(state, k);
    int step = state.repetition_count == 0 ? 0 : decode_streak(state.interference);
    double interval = 0.0;
    if (success) {
        if (step == 0) interval = k.first_interval;
        else if (step == 1) interval = k.second_interval;
        else interval = state.half_life * ease;
        ++step;
    } else {
        step = 0;
        interval = k.first_interval;
        ease = std::max(k.ease_floor, ease - k.lapse_penalty);
    }
    interval = clamp_interval(interval, cfg);

    SchedulerDecision d;
    d.updated_state = reviewed(state, day);
    d.updated_state.half_life = interval;
    d.updated_state.mastery = encode_ease(ease, k.ease_floor);
    d.updated_state.interference = encode_streak(step);
    d.next_interval = interval;
    d.diagnostics = {{"ease", ease}, {"step", static_cast<double>(step)}};
    return d;
}

// --- THRESHOLD ------------------------------------------------------------------

SchedulerDecision threshold_update(const LearningState& state, bool success, Day day, const SimulationConfig& cfg,
                                   const ThresholdConstants& k) {
    const double half_life =
        success ? state.half_life * k.growth : std::max(k.half_life_floor, state.half_life * k.shrink);
    SchedulerDecision d;
    d.updated_state = reviewed(state, day);
    d.updated_state.half_life = half_life;
    d.next_interval = clamp_interval(-half_life * std::log(k.recall_threshold), cfg);
    d.diagnostics = {{"half_life", half_life}};
    return d;
}

// --- SSP-MMC (value-iteration variant) ------------------------------------------

SspMmcPolicy sspmmc_policy(const SspMmcConstants& k) {
    return solve_sspmmc_policy(k.grid, k.model, k.tolerance, k.max_sweeps);
}

SchedulerDecision sspmmc_update(const LearningState& state, bool success, const SspMmcPolicy& policy, Day day,
                                const SimulationConfig& cfg) {
    const SspMmcModel& m = policy.model();
    const double growth = m.growth_base - m.growth_slope * state.difficulty;
    const double half_life =
        success ? state.half_life * growth : std::max(policy.grid().h_min, state.half_life * m.failure_factor);
    const double target = policy.target_for(state.difficulty, half_life);

    SchedulerDecision d;
    d.updated_state = reviewed(state, day);
    d.updated_state.half_life = half_life;
    d.next_interval = clamp_interval(-half_life * std::log(target), cfg);
    d.diagnostics = {{"half_life", half_life}, {"target", target}, {"absorbing", policy.absorbing(half_life) ? 1.0 : 0.0}};
    return d;
}

// --- Scheduler ------------------------------------------------------------------

Scheduler::Scheduler(SchedulerId id, SchedulerConstants constants)
    : Scheduler(id, constants,
                id == SchedulerId::SspMmc ? std::make_shared<const SspMmcPolicy>(sspmmc_policy(constants.sspmmc))
                                          : nullptr) {}

Scheduler::Scheduler(SchedulerId id, SchedulerConstants constants, std::shared_ptr<const SspMmcPolicy> policy)
    : id_(id), constants_(std::move(constants)), policy_(std::move(policy)) {
    if (id_ == SchedulerId::SspMmc && !policy_) throw ConfigError("SSP-MMC scheduler needs a solved policy");
}

double Scheduler::predicted_recall(const LearningState& state, const LearnerProfile& profile, double pressure,
                                   double elapsed, const SimulationConfig& cfg) const {
    if (state.repetition_count == 0) return 1.0;
    elapsed = std::max(0.0, elapsed);
    double r = 1.0;
    switch (id_) {
        case SchedulerId::Lector:
            r = lector_retention(elapsed, lector_params(state, profile, pressure, constants_.lector));
            break;
        case SchedulerId::Hlr:
            r = std::exp2(-elapsed / state.half_life);
            break;
        case SchedulerId::Fsrs:
            r = std::pow(0.9, elapsed / state.half_life);
            break;
        case SchedulerId::Threshold:
        case SchedulerId::SspMmc:
            r = std::exp(-elapsed / state.half_life);
            break;
        case SchedulerId::Sm2:
        case SchedulerId::Anki:
            // Fixed-step schedulers: recall hits target_recall on the due day.
            r = std::pow(cfg.target_recall, elapsed / state.half_life);
            break;
    }
    return clamp_unit(r);
}

SchedulerDecision Scheduler::review(const LearningState& state, const LearnerProfile& profile, const ReviewContext& ctx,
                                    const SimulationConfig& cfg) const {
    SchedulerDecision d;
    switch (id_) {
        case SchedulerId::Lector:
            return lector_update(state, profile, ctx.success, ctx.pressure, ctx.recent, ctx.day, cfg, constants_.lector);
        case SchedulerId::Sm2:
            d = sm2_update(state, ctx.success ? constants_.sm2.success_quality : constants_.sm2.failure_quality, ctx.day,
                           cfg, constants_.sm2);
            break;
        case SchedulerId::Hlr: d = hlr_update(state, ctx.success, ctx.prior, ctx.day, cfg, constants_.hlr); break;
        case SchedulerId::Fsrs:
            d = fsrs_update(state, ctx.success ? constants_.fsrs.success_rating : constants_.fsrs.failure_rating, ctx.day,
                            cfg, constants_.fsrs);
            break;
        case SchedulerId::Anki: d = anki_update(state, ctx.success, ctx.day, cfg, constants_.anki); break;
        case SchedulerId::Threshold: d = threshold_update(state, ctx.success, ctx.day, cfg, constants_.threshold); break;
        case SchedulerId::SspMmc: d = sspmmc_update(state, ctx.success, *policy_, ctx.day, cfg); break;
    }
    d.updated_profile = profile;
    return d;
}

}  // namespace lector
