#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "lector/core_types.hpp"
#include "lector/errors.hpp"
#include "test_util.hpp"

using namespace lector;

TEST(ValidateState, AcceptsConsistentState) {
    LearningState s{0.5, 3.0, 2, 0.6, 0.1, 4};
    EXPECT_TRUE(validate_state(s).empty());
}

TEST(ValidateState, ZeroHalfLife) {
    LearningState s{0.5, 0.0, 2, 0.6, 0.1, 4};
    auto v = validate_state(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0], "h > 0 violated");
}

TEST(ValidateState, RepetitionWithoutLastReview) {
    LearningState s{0.5, 3.0, 0, 0.6, 0.1, 7};
    auto v = validate_state(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0], "rho=0 iff last_review none violated");
}

TEST(ValidateState, ReportsEveryViolation) {
    LearningState s{1.5, -1.0, 0, 2.0, -0.5, 3};
    EXPECT_EQ(validate_state(s).size(), 5u);
}

TEST(ValidateState, FreshStateIsValid) { EXPECT_TRUE(validate_state(initial_state(0.3)).empty()); }

TEST(ClampUnit, Examples) {
    EXPECT_DOUBLE_EQ(clamp_unit(0.5), 0.5);
    EXPECT_DOUBLE_EQ(clamp_unit(-0.2), 0.0);
    EXPECT_DOUBLE_EQ(clamp_unit(1.7), 1.0);
}

TEST(ClampUnit, NonFiniteThrows) {
    EXPECT_THROW(clamp_unit(std::numeric_limits<double>::quiet_NaN()), NumericError);
    EXPECT_THROW(clamp_unit(std::numeric_limits<double>::infinity()), NumericError);
}

TEST(ClampUnit, Idempotent) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        double x = fixture::uniform(rng, -3.0, 3.0);
        EXPECT_EQ(clamp_unit(clamp_unit(x)), clamp_unit(x));
    }
}

TEST(InitialState, Defaults) {
    LearningState s = initial_state(0.4);
    EXPECT_DOUBLE_EQ(s.difficulty, 0.4);
    EXPECT_DOUBLE_EQ(s.half_life, 1.0);
    EXPECT_EQ(s.repetition_count, 0);
    EXPECT_DOUBLE_EQ(s.mastery, 0.0);
    EXPECT_DOUBLE_EQ(s.interference, 0.0);
    EXPECT_FALSE(s.last_review.has_value());
}

TEST(SchedulerNames, RoundTrip) {
    for (SchedulerId id : kAllSchedulers) EXPECT_EQ(parse_scheduler_id(to_string(id)), id);
    EXPECT_EQ(to_string(SchedulerId::Fsrs), "fsrs-simplified");
    EXPECT_EQ(to_string(SchedulerId::SspMmc), "sspmmc-simplified");
    EXPECT_EQ(parse_scheduler_id("fsrs"), SchedulerId::Fsrs);
    EXPECT_EQ(parse_scheduler_id("ssp-mmc"), SchedulerId::SspMmc);
    EXPECT_THROW(parse_scheduler_id("leitner"), ConfigError);
}

TEST(ConfigValidation, Defaults) {
    SimulationConfig cfg;
    EXPECT_TRUE(validate_config(cfg).empty());
    EXPECT_EQ(cfg.n_learners, 100);
    EXPECT_EQ(cfg.n_days, 100);
    EXPECT_EQ(cfg.concepts_per_learner, 25);
    EXPECT_EQ(cfg.n_groups, 50);
    EXPECT_EQ(cfg.scheduler_ids.size(), 7u);
}

TEST(ConfigValidation, RejectsOversizedAssignment) {
    SimulationConfig cfg;
    cfg.n_groups = 2;
    cfg.concepts_per_learner = 11;
    EXPECT_FALSE(validate_config(cfg).empty());
}

TEST(ConfigValidation, RejectsInvertedBounds) {
    SimulationConfig cfg;
    cfg.min_interval = 10;
    cfg.max_interval = 5;
    EXPECT_FALSE(validate_config(cfg).empty());
    cfg = SimulationConfig{};
    cfg.target_recall = 1.0;
    EXPECT_FALSE(validate_config(cfg).empty());
}

TEST(Serialization, ConceptRoundTrip) {
    Concept c{"g001c2", "lumenous", "a sense", "g001", 0.25};
    json j = c;
    EXPECT_EQ(j.get<Concept>(), c);
}

TEST(Serialization, StateRoundTripWithAndWithoutLastReview) {
    LearningState a{0.5, 3.0, 2, 0.6, 0.1, 4};
    LearningState b = initial_state(0.7);
    EXPECT_EQ(json(a).get<LearningState>(), a);
    EXPECT_EQ(json(b).get<LearningState>(), b);
    EXPECT_TRUE(json(b).at("last_review").is_null());
}

TEST(Serialization, ProfileEventConfigRoundTrip) {
    LearnerProfile p{0.1, 0.2, 0.3, 0.4, 0.25};
    EXPECT_EQ(json(p).get<LearnerProfile>(), p);
    ReviewEvent e{3, "g000c1", 9, 2.5, true, 0.81, SchedulerId::Hlr};
    EXPECT_EQ(json(e).get<ReviewEvent>(), e);
    SimulationConfig cfg;
    cfg.seed = 0xfeedfacecafebeefULL;
    cfg.scheduler_ids = {SchedulerId::Threshold, SchedulerId::Lector};
    cfg.provider = ProviderKind::Llm;
    EXPECT_EQ(json(cfg).get<SimulationConfig>(), cfg);
}

TEST(Serialization, FieldNamesAreSnakeCase) {
    json j = LearningState{0.5, 3.0, 2, 0.6, 0.1, 4};
    for (const char* key : {"difficulty", "half_life", "repetition_count", "mastery", "interference", "last_review"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
}

TEST(Serialization, ConfigRejectsUnknownKey) {
    json j = {{"n_learners", 3}, {"n_dayz", 4}};
    EXPECT_THROW(j.get<SimulationConfig>(), ConfigError);
}

TEST(Serialization, PartialConfigKeepsDefaults) {
    json j = {{"n_learners", 3}, {"scheduler_ids", {"threshold"}}};
    auto cfg = j.get<SimulationConfig>();
    EXPECT_EQ(cfg.n_learners, 3);
    EXPECT_EQ(cfg.n_days, 100);
    ASSERT_EQ(cfg.scheduler_ids.size(), 1u);
    EXPECT_EQ(cfg.scheduler_ids[0], SchedulerId::Threshold);
}

TEST(PoolFile, RoundTripAndValidation) {
    ConceptPool pool;
    pool.groups.push_back({"g0", {"a", "b"}, 0.8});
    pool.concepts.push_back({"a", "alpha", "first", "g0", 0.2});
    pool.concepts.push_back({"b", "alphas", "second", "g0", 0.6});
    json j = pool_to_json(pool);
    ASSERT_TRUE(j.contains("groups"));
    EXPECT_EQ(j["groups"][0]["members"][1]["term"], "alphas");
    EXPECT_EQ(pool_from_json(j), pool);

    fixture::TempDir dir;
    fixture::write_text(dir / "pool.json", j.dump());
    EXPECT_EQ(load_concept_pool((dir / "pool.json").string()), pool);

    j["groups"][0]["members"][1]["id"] = "a";
    EXPECT_THROW(pool_from_json(j), ConfigError);
    EXPECT_THROW(load_concept_pool((dir / "missing.json").string()), ConfigError);
}

TEST(PoolFile, RejectsOutOfRangeDifficulty) {
    json j = {{"groups",
               {{{"group_id", "g"}, {"base_similarity", 0.5}, {"members", {{{"id", "x"}, {"term", "t"}, {"gloss", ""}, {"difficulty", 1.5}}}}}}}};
    EXPECT_THROW(pool_from_json(j), ConfigError);
}
