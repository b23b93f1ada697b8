#include <cmath>

#include <gtest/gtest.h>

#include "lector/errors.hpp"
#include "lector/schedulers.hpp"

using namespace lector;

namespace {

const SimulationConfig kCfg{};

LearningState state_with(double h, double mu, int rho = 0, std::optional<Day> last = std::nullopt) {
    LearningState s = initial_state(0.5);
    s.half_life = h;
    s.mastery = mu;
    s.repetition_count = rho;
    s.last_review = last;
    return s;
}

// Textbook SM-2 on (n, EF, I); interval computed before the EF update.
struct Sm2Oracle {
    int n = 0;
    double ef = 2.5;
    double interval = 0.0;

    double review(int q) {
        if (q >= 3) {
            interval = n == 0 ? 1.0 : n == 1 ? 6.0 : interval * ef;
            ++n;
        } else {
            n = 0;
            interval = 1.0;
        }
        ef = std::max(1.3, ef + (0.1 - (5 - q) * (0.08 + (5 - q) * 0.02)));
        return interval;
    }
};

}  // namespace

TEST(LectorRetention, Examples) {
    EXPECT_DOUBLE_EQ(lector_retention(0.0, {5, 1, 1}), 1.0);
    EXPECT_NEAR(lector_retention(5.0, {5, 1, 1}), 0.367879, 1e-6);
    EXPECT_NEAR(lector_retention(2.0, {4, 0.5, 1}), 0.367879, 1e-6);
    EXPECT_THROW(lector_retention(-1.0, {5, 1, 1}), SchedulerError);
}

TEST(LectorParams, Examples) {
    LearnerProfile profile;
    auto p = lector_params(state_with(3.0, 0.0), profile, 0.0);
    EXPECT_DOUBLE_EQ(p.tau, 3.0);
    EXPECT_DOUBLE_EQ(p.alpha, 1.0);
    EXPECT_DOUBLE_EQ(p.beta, 1.0);
    EXPECT_DOUBLE_EQ(lector_params(state_with(4.0, 1.0), profile, 0.0).tau, 8.0);
    profile.semantic_sensitivity = 1.0;
    EXPECT_DOUBLE_EQ(lector_params(state_with(4.0, 0.0), profile, 1.0).alpha, 0.5);
}

TEST(LectorParams, AlphaFloor) {
    LectorConstants k;
    k.kappa_sem = 5.0;
    LearnerProfile profile;
    profile.semantic_sensitivity = 1.0;
    EXPECT_DOUBLE_EQ(lector_params(state_with(4.0, 0.0), profile, 1.0, k).alpha, 0.1);
}

TEST(LectorInterval, NeutralFactorsGiveBase) {
    LearnerProfile profile;
    auto [interval, f] = lector_interval(state_with(30.0, 0.5), profile, 0.0, kCfg);
    EXPECT_DOUBLE_EQ(f.semantic, 1.0);
    EXPECT_DOUBLE_EQ(f.mastery, 1.0);
    EXPECT_DOUBLE_EQ(f.repetition, 1.0);
    EXPECT_DOUBLE_EQ(f.personal, 1.0);
    EXPECT_DOUBLE_EQ(interval, f.base);
    EXPECT_NEAR(f.base, -std::log(0.9) * 45.0, 1e-12);
}

TEST(LectorInterval, BaseAtEffectiveHalfLifeTen) {
    LearnerProfile profile;
    // tau = 10, alpha = 1, beta = 1.
    auto [interval, f] = lector_interval(state_with(10.0, 0.0), profile, 0.0, kCfg);
    EXPECT_NEAR(f.base, 1.0536, 1e-4);
    EXPECT_NEAR(f.base, 10.0 * std::log(10.0 / 9.0), 1e-12);
    (void)interval;
}

TEST(LectorInterval, ClampsToMinimum) {
    LearnerProfile profile;
    auto [interval, f] = lector_interval(state_with(1.0, 0.0), profile, 1.0, kCfg);
    EXPECT_LT(f.product(), 1.0);
    EXPECT_DOUBLE_EQ(interval, 1.0);
}

TEST(LectorInterval, RepetitionFactorCaps) {
    LearnerProfile profile;
    auto [i1, f1] = lector_interval(state_with(10.0, 0.5, 5, 0), profile, 0.0, kCfg);
    auto [i2, f2] = lector_interval(state_with(10.0, 0.5, 50, 0), profile, 0.0, kCfg);
    EXPECT_DOUBLE_EQ(f1.repetition, 1.5);
    EXPECT_DOUBLE_EQ(f2.repetition, 2.0);
    (void)i1;
    (void)i2;
}

TEST(LectorUpdate, SuccessFromFresh) {
    auto d = lector_update(state_with(1.0, 0.0), LearnerProfile{}, true, 0.0, {0.5, 0.5, 0.5, 0.5}, 3, kCfg);
    EXPECT_DOUBLE_EQ(d.updated_state.half_life, 1.6);
    EXPECT_DOUBLE_EQ(d.updated_state.mastery, 0.1);
    EXPECT_EQ(d.updated_state.repetition_count, 1);
    EXPECT_EQ(d.updated_state.last_review, 3);
    EXPECT_TRUE(validate_state(d.updated_state).empty());
    for (const char* key : {"I_base", "F1_semantic", "F2_mastery", "F3_repetition", "F4_personal"}) {
        EXPECT_TRUE(d.diagnostics.count(key)) << key;
    }
}

TEST(LectorUpdate, FailureExamples) {
    auto d = lector_update(state_with(4.0, 0.5, 2, 1), LearnerProfile{}, false, 0.3, {0, 0, 0, 0}, 5, kCfg);
    EXPECT_DOUBLE_EQ(d.updated_state.half_life, 2.0);
    EXPECT_DOUBLE_EQ(d.updated_state.mastery, 0.35);
    EXPECT_DOUBLE_EQ(d.updated_state.interference, 0.3);
    auto f = lector_update(state_with(1.2, 0.0, 1, 1), LearnerProfile{}, false, 0.0, {0, 0, 0, 0}, 5, kCfg);
    EXPECT_DOUBLE_EQ(f.updated_state.half_life, 1.0);
}

TEST(LectorUpdate, IntervalUsesUpdatedState) {
    LearnerProfile profile;
    RecentMetrics recent{0.5, 0.5, 0.5, 0.5};
    auto d = lector_update(state_with(5.0, 0.2, 1, 0), profile, true, 0.1, recent, 4, kCfg);
    auto [expected, f] = lector_interval(d.updated_state, d.updated_profile, 0.1, kCfg);
    EXPECT_DOUBLE_EQ(d.next_interval, expected);
    (void)f;
}

TEST(UpdateProfile, Examples) {
    LearnerProfile p{0.5, 0.5, 0.5, 0.5, 0.0};
    EXPECT_EQ(update_profile(p, {0.9, 0.1, 0.3, 1.0}), p);
    p.adaptation_rate = 1.0;
    auto q = update_profile(p, {0.9, 0.1, 0.3, 1.0});
    EXPECT_DOUBLE_EQ(q.success_rate, 0.9);
    EXPECT_DOUBLE_EQ(q.learning_speed, 0.1);
    EXPECT_DOUBLE_EQ(q.retention, 0.3);
    EXPECT_DOUBLE_EQ(q.semantic_sensitivity, 1.0);
    EXPECT_DOUBLE_EQ(q.adaptation_rate, 1.0);
    p.adaptation_rate = 0.3;
    EXPECT_NEAR(update_profile(p, {0.9, 0.9, 0.9, 0.9}).success_rate, 0.62, 1e-12);
}

TEST(Sm2, MatchesTextbookOracle) {
    const int qualities[] = {5, 5, 5, 4, 2, 5, 3, 5, 5, 1, 0, 4, 5, 5};
    Sm2Oracle oracle;
    LearningState s = initial_state(0.5);
    Day day = 0;
    for (int q : qualities) {
        auto d = sm2_update(s, q, day, kCfg);
        EXPECT_NEAR(d.next_interval, std::min(365.0, oracle.review(q)), 1e-9) << "q=" << q;
        EXPECT_NEAR(d.diagnostics.at("ease"), oracle.ef, 1e-9);
        s = d.updated_state;
        day += 1;
    }
}

TEST(Sm2, LookupTable) {
    // First five perfect answers, then a lapse.
    const double expected[] = {1.0, 6.0, 16.2, 45.36, 131.544, 1.0};
    const int qualities[] = {5, 5, 5, 5, 5, 2};
    LearningState s = initial_state(0.5);
    for (int i = 0; i < 6; ++i) {
        auto d = sm2_update(s, qualities[i], i, kCfg);
        EXPECT_NEAR(d.next_interval, expected[i], 1e-9) << i;
        s = d.updated_state;
    }
    // EF climbs to 3.0, then a quality-2 lapse costs 0.32.
    EXPECT_NEAR(sm2_ease(s), 2.68, 1e-9);
}

TEST(Sm2, LapseAfterThreeSuccessesResets) {
    LearningState s = initial_state(0.5);
    for (int i = 0; i < 3; ++i) s = sm2_update(s, 5, i, kCfg).updated_state;
    auto d = sm2_update(s, 2, 3, kCfg);
    EXPECT_DOUBLE_EQ(d.next_interval, 1.0);
    EXPECT_DOUBLE_EQ(d.diagnostics.at("streak"), 0.0);
    EXPECT_DOUBLE_EQ(sm2_update(d.updated_state, 5, 4, kCfg).next_interval, 1.0);
}

TEST(Sm2, RejectsBadQuality) {
    EXPECT_THROW(sm2_update(initial_state(0.5), 6, 0, kCfg), SchedulerError);
    EXPECT_THROW(sm2_update(initial_state(0.5), -1, 0, kCfg), SchedulerError);
}

TEST(Hlr, Examples) {
    EXPECT_NEAR(hlr_half_life({0, 0}), std::pow(2.0, 0.4), 1e-12);
    EXPECT_NEAR(hlr_half_life({0, 0}), 1.3195, 1e-4);
    SimulationConfig cfg;
    HlrConstants k;
    k.theta_right = 0.0;
    k.theta_wrong = 0.0;
    k.theta_bias = std::log2(10.0);
    auto d = hlr_update(initial_state(0.5), true, {0, 0}, 0, cfg, k);
    EXPECT_NEAR(d.updated_state.half_life, 10.0, 1e-12);
    EXPECT_NEAR(d.next_interval, 1.5200, 1e-4);
    // Recall at dt = half-life is one half.
    Scheduler hlr(SchedulerId::Hlr, SchedulerConstants{});
    LearningState s = state_with(7.0, 0.0, 1, 0);
    EXPECT_DOUBLE_EQ(hlr.predicted_recall(s, LearnerProfile{}, 0.0, 7.0, cfg), 0.5);
}

TEST(Hlr, UpdateCountsCurrentReview) {
    auto d = hlr_update(initial_state(0.5), false, {2, 1}, 0, kCfg);
    EXPECT_DOUBLE_EQ(d.diagnostics.at("right"), 2.0);
    EXPECT_DOUBLE_EQ(d.diagnostics.at("wrong"), 2.0);
    EXPECT_NEAR(d.updated_state.half_life, hlr_half_life({2, 2}), 1e-15);
    EXPECT_THROW(hlr_update(initial_state(0.5), true, {-1, 0}, 0, kCfg), SchedulerError);
}

TEST(Fsrs, Examples) {
    auto fail = fsrs_update(state_with(4.0, 0.0, 1, 0), 1, 1, kCfg);
    EXPECT_NEAR(fail.updated_state.half_life, 0.5 * std::pow(4.0, 0.7), 1e-12);
    EXPECT_NEAR(fail.updated_state.half_life, 1.3195, 1e-4);
    auto ok = fsrs_update(state_with(6.0, 0.0, 1, 0), 3, 1, kCfg);
    EXPECT_DOUBLE_EQ(ok.updated_state.difficulty, 0.5);
    EXPECT_DOUBLE_EQ(ok.next_interval, ok.updated_state.half_life);
    const double growth = std::exp(0.5) * (11.0 - 5.0) * std::pow(6.0, -0.2) * 0.05 * 1.5;
    EXPECT_NEAR(ok.updated_state.half_life, 6.0 * (1.0 + growth), 1e-12);
    EXPECT_NEAR(fail.updated_state.difficulty, 0.55, 1e-12);
    EXPECT_THROW(fsrs_update(initial_state(0.5), 0, 0, kCfg), SchedulerError);
    EXPECT_THROW(fsrs_update(initial_state(0.5), 5, 0, kCfg), SchedulerError);
}

TEST(Fsrs, FailureFloor) {
    auto d = fsrs_update(state_with(1.0, 0.0, 1, 0), 1, 1, kCfg);
    EXPECT_DOUBLE_EQ(d.updated_state.half_life, 1.0);
}

TEST(Anki, GraduatingSteps) {
    LearningState s = initial_state(0.5);
    auto d1 = anki_update(s, true, 0, kCfg);
    EXPECT_DOUBLE_EQ(d1.next_interval, 1.0);
    auto d2 = anki_update(d1.updated_state, true, 1, kCfg);
    EXPECT_DOUBLE_EQ(d2.next_interval, 3.0);
    auto d3 = anki_update(d2.updated_state, true, 4, kCfg);
    EXPECT_DOUBLE_EQ(d3.next_interval, 7.5);
    auto lapse = anki_update(d3.updated_state, false, 12, kCfg);
    EXPECT_DOUBLE_EQ(lapse.next_interval, 1.0);
    EXPECT_NEAR(lapse.diagnostics.at("ease"), 2.3, 1e-12);
    auto again = anki_update(lapse.updated_state, true, 13, kCfg);
    EXPECT_DOUBLE_EQ(again.next_interval, 1.0);
}

TEST(Anki, EaseFloor) {
    LearningState s = initial_state(0.5);
    for (int i = 0; i < 20; ++i) s = anki_update(s, false, i, kCfg).updated_state;
    EXPECT_NEAR(anki_ease(s), 1.3, 1e-9);
}

TEST(Threshold, Examples) {
    auto d = threshold_update(state_with(0.5, 0.0), true, 0, kCfg);
    EXPECT_DOUBLE_EQ(d.updated_state.half_life, 1.0);
    EXPECT_DOUBLE_EQ(d.next_interval, 1.0);
    auto ten = threshold_update(state_with(5.0, 0.0), true, 0, kCfg);
    EXPECT_NEAR(ten.next_interval, 3.567, 1e-3);
    LearningState s = state_with(1.0, 0.0);
    for (int i = 0; i < 2; ++i) s = threshold_update(s, true, i, kCfg).updated_state;
    EXPECT_DOUBLE_EQ(s.half_life, 4.0);
    EXPECT_DOUBLE_EQ(threshold_update(state_with(1.5, 0.0, 1, 0), false, 1, kCfg).updated_state.half_life, 1.0);
}

TEST(SspMmcUpdate, Examples) {
    SspMmcPolicy policy = sspmmc_policy();
    LearningState s = state_with(2.0, 0.0);
    s.difficulty = 0.0;
    auto d = sspmmc_update(s, true, policy, 0, kCfg);
    EXPECT_NEAR(d.updated_state.half_life, 4.4, 1e-12);
    EXPECT_NEAR(d.next_interval, std::max(1.0, -4.4 * std::log(d.diagnostics.at("target"))), 1e-12);

    // Absorbing state uses the smallest target (longest interval).
    LearningState big = state_with(400.0, 0.0, 3, 0);
    auto a = sspmmc_update(big, true, policy, 1, kCfg);
    EXPECT_DOUBLE_EQ(a.diagnostics.at("absorbing"), 1.0);
    EXPECT_DOUBLE_EQ(a.diagnostics.at("target"), 0.70);
    EXPECT_NEAR(a.next_interval, std::min(kCfg.max_interval, -a.diagnostics.at("half_life") * std::log(0.70)), 1e-9);
}

TEST(SspMmcUpdate, IntervalFromTarget) {
    SspMmcConstants k;
    k.model.actions = {0.9};
    SspMmcPolicy policy = sspmmc_policy(k);
    LearningState s = state_with(10.0 / 0.5, 0.0, 1, 0);
    s.difficulty = 1.0;
    auto d = sspmmc_update(s, false, policy, 1, kCfg);
    EXPECT_DOUBLE_EQ(d.updated_state.half_life, 10.0);
    EXPECT_NEAR(d.next_interval, 1.0536, 1e-4);
}

TEST(SchedulerInterface, OutcomeMapping) {
    SchedulerConstants k;
    LearningState s = initial_state(0.5);
    LearnerProfile profile;
    ReviewContext ok;
    ok.success = true;
    ReviewContext bad;
    Scheduler sm2(SchedulerId::Sm2, k);
    EXPECT_EQ(sm2.review(s, profile, ok, kCfg).updated_state, sm2_update(s, 5, 0, kCfg).updated_state);
    EXPECT_EQ(sm2.review(s, profile, bad, kCfg).updated_state, sm2_update(s, 2, 0, kCfg).updated_state);
    Scheduler fsrs(SchedulerId::Fsrs, k);
    EXPECT_EQ(fsrs.review(s, profile, ok, kCfg).updated_state, fsrs_update(s, 3, 0, kCfg).updated_state);
    EXPECT_EQ(fsrs.review(s, profile, bad, kCfg).updated_state, fsrs_update(s, 1, 0, kCfg).updated_state);
}

TEST(SchedulerInterface, BaselinesLeaveProfileUntouched) {
    LearnerProfile profile{0.3, 0.4, 0.6, 0.7, 0.2};
    ReviewContext ctx;
    ctx.success = true;
    ctx.recent = {1, 1, 1, 1};
    for (SchedulerId id : kAllSchedulers) {
        Scheduler s(id, SchedulerConstants{});
        auto d = s.review(initial_state(0.5), profile, ctx, kCfg);
        if (id == SchedulerId::Lector) {
            EXPECT_NE(d.updated_profile, profile);
        } else {
            EXPECT_EQ(d.updated_profile, profile) << to_string(id);
        }
    }
}

TEST(SchedulerInterface, PredictedRecallOfNewItemIsOne) {
    for (SchedulerId id : kAllSchedulers) {
        Scheduler s(id, SchedulerConstants{});
        EXPECT_DOUBLE_EQ(s.predicted_recall(initial_state(0.5), LearnerProfile{}, 0.0, 0.0, kCfg), 1.0);
    }
}

TEST(Overrides, AppliesAndRejectsUnknown) {
    SchedulerConstants k;
    apply_overrides(k, json{{"lector", {{"kappa_sem", 0.7}, {"lambda", 0.4}}}, {"threshold", {{"recall_threshold", 0.8}}}});
    EXPECT_DOUBLE_EQ(k.lector.kappa_sem, 0.7);
    EXPECT_DOUBLE_EQ(k.lector.lambda, 0.4);
    EXPECT_DOUBLE_EQ(k.threshold.recall_threshold, 0.8);
    EXPECT_THROW(apply_overrides(k, json{{"lector", {{"kappa", 0.7}}}}), ConfigError);
    EXPECT_THROW(apply_overrides(k, json{{"leitner", json::object()}}), ConfigError);
    EXPECT_THROW(apply_overrides(k, json{{"lector", {{"lambda", 2.0}}}}), ConfigError);
    json dumped = to_json(k);
    SchedulerConstants back;
    apply_overrides(back, dumped);
    EXPECT_EQ(to_json(back), dumped);
}
