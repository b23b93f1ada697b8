#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lector/core_types.hpp"
#include "lector/sspmmc.hpp"

namespace lector {

// LearningState slot usage per scheduler. Every scheduler increments
// repetition_count and sets last_review on each review, so the shared
// invariants hold for all seven.
//
//   LECTOR     d, h, rho, mu, sigma as named.
//   SM2/ANKI   h = previous interval, mu = 1 - ease_floor / EF,
//              sigma = min(consecutive successes, 2) / 2.
//   HLR        h = predicted half-life, mu = fraction correct.
//   FSRS       h = stability S, d = difficulty D.
//   THRESHOLD  h = half-life.
//   SSP-MMC    h = half-life, d = difficulty used for the policy bin.

struct RetentionParams {
    double tau = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    double effective_half_life() const { return tau * alpha * beta; }
};

struct IntervalFactors {
    double base = 1.0;
    double semantic = 1.0;
    double mastery = 1.0;
    double repetition = 1.0;
    double personal = 1.0;

    double product() const { return base * semantic * mastery * repetition * personal; }
};

struct SchedulerDecision {
    double next_interval = 1.0;
    LearningState updated_state;
    LearnerProfile updated_profile;
    std::map<std::string, double> diagnostics;
};

// Trailing-window means in [0,1]^4, in profile field order:
// success, speed (min_interval / elapsed), predicted recall, pressure.
using RecentMetrics = std::array<double, 4>;

struct ReviewHistory {
    int right = 0;
    int wrong = 0;
};

struct LectorConstants {
    double kappa_sem = 0.5;
    double alpha_floor = 0.1;
    double beta_offset = 0.5;
    double lambda = 0.2;
    double growth_base = 1.6;
    double growth_mastery = 0.4;
    double failure_factor = 0.5;
    double half_life_floor = 1.0;
    double mastery_gain = 0.1;
    double mastery_decay = 0.7;
    double semantic_weight = 0.3;
    double mastery_offset = 0.5;
    double repetition_step = 0.1;
    double repetition_cap = 2.0;
    double speed_offset = 0.5;
    int recent_window = 20;

    template <typename F>
    void for_each_field(F&& f) {
        f("kappa_sem", kappa_sem);
        f("alpha_floor", alpha_floor);
        f("beta_offset", beta_offset);
        f("lambda", lambda);
        f("growth_base", growth_base);
        f("growth_mastery", growth_mastery);
        f("failure_factor", failure_factor);
        f("half_life_floor", half_life_floor);
        f("mastery_gain", mastery_gain);
        f("mastery_decay", mastery_decay);
        f("semantic_weight", semantic_weight);
        f("mastery_offset", mastery_offset);
        f("repetition_step", repetition_step);
        f("repetition_cap", repetition_cap);
        f("speed_offset", speed_offset);
        f("recent_window", recent_window);
    }
};

struct Sm2Constants {
    double ease_initial = 2.5;
    double ease_floor = 1.3;
    double first_interval = 1.0;
    double second_interval = 6.0;
    int success_quality = 5;
    int failure_quality = 2;

    template <typename F>
    void for_each_field(F&& f) {
        f("ease_initial", ease_initial);
        f("ease_floor", ease_floor);
        f("first_interval", first_interval);
        f("second_interval", second_interval);
        f("success_quality", success_quality);
        f("failure_quality", failure_quality);
    }
};

struct HlrConstants {
    double theta_right = 0.3;
    double theta_wrong = -0.4;
    double theta_bias = 0.5;

    template <typename F>
    void for_each_field(F&& f) {
        f("theta_right", theta_right);
        f("theta_wrong", theta_wrong);
        f("theta_bias", theta_bias);
    }
};

struct FsrsConstants {
    double growth_scale = 0.05;
    double stability_decay = 0.2;
    double lapse_scale = 0.5;
    double lapse_power = 0.7;
    double stability_floor = 1.0;
    double difficulty_step = 0.05;
    int success_rating = 3;
    int failure_rating = 1;

    template <typename F>
    void for_each_field(F&& f) {
        f("growth_scale", growth_scale);
        f("stability_decay", stability_decay);
        f("lapse_scale", lapse_scale);
        f("lapse_power", lapse_power);
        f("stability_floor", stability_floor);
        f("difficulty_step", difficulty_step);
        f("success_rating", success_rating);
        f("failure_rating", failure_rating);
    }
};

struct AnkiConstants {
    double first_interval = 1.0;
    double second_interval = 3.0;
    double ease_initial = 2.5;
    double ease_floor = 1.3;
    double lapse_penalty = 0.2;

    template <typename F>
    void for_each_field(F&& f) {
        f("first_interval", first_interval);
        f("second_interval", second_interval);
        f("ease_initial", ease_initial);
        f("ease_floor", ease_floor);
        f("lapse_penalty", lapse_penalty);
    }
};

struct ThresholdConstants {
    double recall_threshold = 0.7;
    double growth = 2.0;
    double shrink = 0.5;
    double half_life_floor = 1.0;

    template <typename F>
    void for_each_field(F&& f) {
        f("recall_threshold", recall_threshold);
        f("growth", growth);
        f("shrink", shrink);
        f("half_life_floor", half_life_floor);
    }
};

struct SspMmcConstants {
    SspMmcGrid grid;
    SspMmcModel model;
    double tolerance = 1e-6;
    int max_sweeps = 10'000;

    template <typename F>
    void for_each_field(F&& f) {
        f("h_min", grid.h_min);
        f("horizon", grid.horizon);
        f("n_half_life_bins", grid.n_half_life_bins);
        f("n_difficulty_bins", grid.n_difficulty_bins);
        f("growth_base", model.growth_base);
        f("growth_slope", model.growth_slope);
        f("failure_factor", model.failure_factor);
        f("actions", model.actions);
        f("tolerance", tolerance);
        f("max_sweeps", max_sweeps);
    }
};

struct SchedulerConstants {
    LectorConstants lector;
    Sm2Constants sm2;
    HlrConstants hlr;
    FsrsConstants fsrs;
    AnkiConstants anki;
    ThresholdConstants threshold;
    SspMmcConstants sspmmc;
};

// Overrides file: {"lector": {...}, "sm2": {...}, "hlr": {...}, "fsrs": {...},
// "anki": {...}, "threshold": {...}, "sspmmc": {...}}. Unknown keys are errors; on error `constants` is left unchanged.
void apply_overrides(SchedulerConstants& constants, const json& overrides);
json to_json(const SchedulerConstants& constants);

double clamp_interval(double interval, const SimulationConfig& cfg);

// --- LECTOR -----------------------------------------------------------------

// exp(-dt / (tau * alpha * beta)); throws SchedulerError for dt < 0.
double lector_retention(double dt, const RetentionParams& params);

RetentionParams lector_params(const LearningState& state, const LearnerProfile& profile, double pressure,
                              const LectorConstants& k = {});

// Clamped interval and its factor breakdown. I_base is the elapsed time at
// which the retention curve reaches cfg.target_recall.
std::pair<double, IntervalFactors> lector_interval(const LearningState& state, const LearnerProfile& profile,
                                                   double pressure, const SimulationConfig& cfg,
                                                   const LectorConstants& k = {});

// EMA of the profile towards `recent` with rate profile.adaptation_rate.
LearnerProfile update_profile(const LearnerProfile& profile, const RecentMetrics& recent);

SchedulerDecision lector_update(const LearningState& state, const LearnerProfile& profile, bool success,
                                double pressure, const RecentMetrics& recent, Day day, const SimulationConfig& cfg,
                                const LectorConstants& k = {});

// --- Baselines ----------------------------------------------------------------

double sm2_ease(const LearningState& state, const Sm2Constants& k = {});
SchedulerDecision sm2_update(const LearningState& state, int quality, Day day, const SimulationConfig& cfg,
                             const Sm2Constants& k = {});

// 2^(theta . (sqrt(1+right), sqrt(1+wrong), 1)).
double hlr_half_life(const ReviewHistory& history, const HlrConstants& k = {});
// `prior` counts exclude the current review; the update adds it.
SchedulerDecision hlr_update(const LearningState& state, bool success, const ReviewHistory& prior, Day day,
                             const SimulationConfig& cfg, const HlrConstants& k = {});

SchedulerDecision fsrs_update(const LearningState& state, int rating, Day day, const SimulationConfig& cfg,
                              const FsrsConstants& k = {});

double anki_ease(const LearningState& state, const AnkiConstants& k = {});
SchedulerDecision anki_update(const LearningState& state, bool success, Day day, const SimulationConfig& cfg,
                              const AnkiConstants& k = {});

SchedulerDecision threshold_update(const LearningState& state, bool success, Day day, const SimulationConfig& cfg,
                                   const ThresholdConstants& k = {});

SspMmcPolicy sspmmc_policy(const SspMmcConstants& k = {});
SchedulerDecision sspmmc_update(const LearningState& state, bool success, const SspMmcPolicy& policy, Day day,
                                const SimulationConfig& cfg);

// --- Uniform interface ----------------------------------------------------

struct ReviewContext {
    Day day = 0;
    bool success = false;
    double pressure = 0.0;
    ReviewHistory prior;
    RecentMetrics recent{0.5, 0.5, 0.5, 0.5};
};

class Scheduler {
public:
    // Solves the SSP-MMC policy when id is SspMmc.
    Scheduler(SchedulerId id, SchedulerConstants constants);
    Scheduler(SchedulerId id, SchedulerConstants constants, std::shared_ptr<const SspMmcPolicy> policy);

    SchedulerId id() const noexcept { return id_; }
    const SchedulerConstants& constants() const noexcept { return constants_; }
    const SspMmcPolicy* policy() const noexcept { return policy_.get(); }

    // The scheduler's own recall forecast `elapsed` days after the last review.
    double predicted_recall(const LearningState& state, const LearnerProfile& profile, double pressure, double elapsed,
                            const SimulationConfig& cfg) const;

    SchedulerDecision review(const LearningState& state, const LearnerProfile& profile, const ReviewContext& ctx,
                             const SimulationConfig& cfg) const;

private:
    SchedulerId id_;
    SchedulerConstants constants_;
    std::shared_ptr<const SspMmcPolicy> policy_;
};

}  // namespace lector
