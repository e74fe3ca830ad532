#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace nmlab;

namespace {

Genotype zero_weight_genotype() {
    Stream rng(1);
    Genotype g = initial_genotype(rng);
    for (auto& p : g.activatory) p.weights.fill(0.0);
    return g;
}

Genotype with_modulator(std::uint64_t seed, double global_rate) {
    Stream rng(derive_key(seed, "focal"));
    Genotype g = initial_genotype(rng);
    g.global_rl_rate = global_rate;
    g.modulatory.push_back(ModulatoryProjection::random(kFirstHidden, kFirstHidden, kActionColumn, 0.5, rng));
    g.modulatory.back().fg.b2[0] = 0.2;
    return g;
}

LifetimeSettings short_settings(int trials = 6) {
    LifetimeSettings s;
    s.n_trials = trials;
    return s;
}

TEST(Focal, ZeroGlobalRateMakesRegularEqualNmOnly) {
    const auto rep = focal_report(with_modulator(1, 0.0), make_batch(5, 6), short_settings());
    EXPECT_EQ(rep.regular, rep.nm_only);
    EXPECT_EQ(rep.rl_weight_change_l1, 0.0);
    EXPECT_GT(rep.nm_weight_change_l1, 0.0);
}

TEST(Focal, NoModulationMakesRegularEqualRlOnly) {
    Stream rng(derive_key(2, "focal"));
    Genotype g = initial_genotype(rng);
    g.global_rl_rate = 2.0;
    const auto rep = focal_report(g, make_batch(6, 6), short_settings());
    EXPECT_EQ(rep.regular, rep.rl_only);
    EXPECT_EQ(rep.nm_weight_change_l1, 0.0);
    EXPECT_GT(rep.rl_weight_change_l1, 0.0);
}

TEST(Focal, NoLearningMakesAllThreeAgree) {
    Stream rng(derive_key(3, "focal"));
    const auto rep = focal_report(initial_genotype(rng), make_batch(7, 6), short_settings());
    EXPECT_EQ(rep.regular, rep.nm_only);
    EXPECT_EQ(rep.regular, rep.rl_only);
}

TEST(Focal, AblationsMatchDirectEvaluation) {
    const Genotype g = with_modulator(4, 3.0);
    const Batch b = make_batch(8, 6);
    const auto rep = focal_report(g, b, short_settings(), 2);
    LifetimeSettings s = short_settings();
    s.rl_enabled = false;
    EXPECT_EQ(rep.nm_only, evaluate_lifetime(g, b, s, 1).fitness);
    s.rl_enabled = true;
    s.nm_enabled = false;
    EXPECT_EQ(rep.rl_only, evaluate_lifetime(g, b, s, 1).fitness);
    EXPECT_NEAR(window_mean(rep.profile, 0, rep.profile.size()), rep.regular, 1e-12);
}

TEST(Curves, WindowAndThresholdHelpers) {
    const std::vector<double> c{0.1, 0.4, 0.9, 0.95};
    EXPECT_EQ(first_trial_reaching(c, 0.9), 2);
    EXPECT_EQ(first_trial_reaching(c, 0.99), -1);
    EXPECT_DOUBLE_EQ(window_mean(c, 2, 10), 0.925);
    EXPECT_EQ(window_mean(c, 5, 10), 0.0);
}

TEST(Curves, PerfectControllerIsFlatAtOne) {
    Batch b;
    b.key = 3;
    b.instances = {TaskInstance::with_angle(2.0), TaskInstance::with_angle(2.0)};
    const auto c = learning_curve(oracle::perfect_controller(2.0), b, short_settings(20));
    ASSERT_EQ(c.mean.size(), 20u);
    EXPECT_EQ(first_trial_reaching(c.mean, 0.99), 0);
    for (std::size_t k = 0; k < 20; ++k) {
        EXPECT_GE(c.min[k], 0.99);
        EXPECT_LE(c.min[k], c.mean[k]);
        EXPECT_LE(c.mean[k], c.max[k]);
    }
}

TEST(Curves, NonLearnerHasNoTrend) {
    Stream rng(derive_key(9, "flat"));
    const Genotype g = initial_genotype(rng);
    const auto c = learning_curve(g, make_batch(10, 32), short_settings(50));
    EXPECT_NEAR(window_mean(c.mean, 0, 25), window_mean(c.mean, 25, 50), 0.06);
}

TEST(Curves, MatchesLifetimeProfile) {
    Stream rng(derive_key(10, "prof"));
    const Genotype g = oracle::random_genotype(rng, 5);
    const Batch b = make_batch(11, 5);
    const auto c = learning_curve(g, b, short_settings(8), 2);
    const auto r = evaluate_lifetime(g, b, short_settings(8), 1);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(c.mean[k], r.trial_profile[k], 1e-12);
}

TEST(Trajectory, ZeroWeightsGiveUnitSdAndBoundedSteps) {
    const auto tr = trajectory_dump(zero_weight_genotype(), 7, 4, 2, LifetimeSettings{});
    ASSERT_EQ(tr.steps.size(), 4u * 2u * 10u);
    EXPECT_EQ(tr.steps_per_instance, 20u);
    EXPECT_DOUBLE_EQ(mean_action_sd(tr), 1.0);
    for (std::size_t h = 0; h < tr.instances; ++h) {
        Vec2 prev{};
        for (std::size_t t = 0; t < tr.steps_per_instance; ++t) {
            const auto& s = tr.steps[h * tr.steps_per_instance + t];
            EXPECT_EQ(s.action_mean[0], 0.0);
            EXPECT_EQ(s.action_mean[1], 0.0);
            EXPECT_EQ(s.action_sd[0], 1.0);
            if (t % 10 == 0) prev = {0.0, 0.0};
            EXPECT_LE(std::hypot(s.agent_pos[0] - prev[0], s.agent_pos[1] - prev[1]), 0.1 + 1e-12);
            EXPECT_NEAR(norm(s.target_pos), 1.0, 1e-12);
            prev = s.agent_pos;
        }
    }
}

TEST(Trajectory, SameSeedSameTrace) {
    Stream rng(derive_key(12, "traj"));
    const Genotype g = oracle::random_genotype(rng, 4);
    const auto a = trajectory_dump(g, 5, 3, 1, LifetimeSettings{});
    const auto b = trajectory_dump(g, 5, 3, 1, LifetimeSettings{});
    const auto c = trajectory_dump(g, 6, 3, 1, LifetimeSettings{});
    ASSERT_EQ(a.steps.size(), b.steps.size());
    bool differs = false;
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
        EXPECT_EQ(a.steps[k].agent_pos, b.steps[k].agent_pos);
        EXPECT_EQ(a.steps[k].action_mean, b.steps[k].action_mean);
        differs = differs || a.steps[k].target_pos != c.steps[k].target_pos;
    }
    EXPECT_TRUE(differs);
}

} // namespace
