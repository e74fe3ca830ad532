#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace nmlab;

namespace {

TEST(GuidedActivatory, FullAndNullSteps) {
    Stream rng(derive_key(1, "ga"));
    const Matrix w = random_uniform_matrix(3, 4, -1, 1, rng), m = random_uniform_matrix(3, 4, -1, 1, rng);
    const auto full = guided_activatory(w, m, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(full.data[i], m.data[i]);
    EXPECT_EQ(guided_activatory(w, m, 0.0), w);
}

TEST(GuidedActivatory, StaysOnSegment) {
    Stream rng(derive_key(2, "seg"));
    LearningTrace trace;
    const Matrix target = random_uniform_matrix(3, 4, -1, 1, rng);
    for (int h = 0; h < 5; ++h) {
        InstanceTrace it;
        it.final_weights = {target};
        trace.instances.push_back(it);
    }
    const Matrix w = random_uniform_matrix(3, 4, -1, 1, rng);
    const auto mean = mean_final_weights(trace, 0);
    ASSERT_TRUE(mean);
    for (int k = 0; k < 100; ++k) {
        const double u = rng.uniform();
        const auto out = guided_activatory(w, *mean, u);
        for (std::size_t i = 0; i < w.size(); ++i) {
            EXPECT_GE(out.data[i], std::min(w.data[i], target.data[i]) - 1e-15);
            EXPECT_LE(out.data[i], std::max(w.data[i], target.data[i]) + 1e-15);
            EXPECT_NEAR(out.data[i], w.data[i] + u * (target.data[i] - w.data[i]), 1e-15);
        }
    }
}

TEST(GuidedActivatory, MeanSkipsDivergedInstances) {
    LearningTrace trace;
    InstanceTrace a, b, c;
    a.final_weights = {Matrix(1, 1, 1.0)};
    b.final_weights = {Matrix(1, 1, 3.0)};
    c.final_weights = {Matrix(1, 1, 100.0)};
    c.diverged = true;
    trace.instances = {a, b, c};
    EXPECT_EQ(mean_final_weights(trace, 0)->data[0], 2.0);
}

TEST(GuidedLoss, RewardNormalisation) {
    const std::vector<double> r{0.2, 0.5, 0.8};
    const auto s = reward_weights(r);
    EXPECT_NEAR(s[0], 0.0, 1e-15);
    EXPECT_NEAR(s[1], 0.5, 1e-15);
    EXPECT_NEAR(s[2], 1.0, 1e-15);
    const std::vector<double> flat{0.3, 0.3};
    for (double v : reward_weights(flat)) EXPECT_EQ(v, 1.0);
}

TEST(GuidedLoss, NoLearningParentAndNoUpdateCandidateGivesZero) {
    Stream rng(derive_key(3, "zero"));
    ReplayProblem p = oracle::skeleton(6, 6, 8, Activation::tanh, rng);
    for (int h = 0; h < 4; ++h) {
        auto ri = oracle::random_instance(p, 10, rng);
        ri.final_weights = p.innate_weights;
        p.instances.push_back(ri);
    }
    p.precompute_targets();
    auto q = oracle::random_params(p, rng);
    q.fg = Mlp::zeros(14, kFgHidden, 1);
    q.fg.b2[0] = -0.5;  // eta = 0
    EXPECT_EQ(guided_loss(q, p, oracle::all_instances(p)), 0.0);
    EXPECT_EQ(zero_update_loss(p, oracle::all_instances(p)), 0.0);
}

TEST(GuidedLoss, ScalarHandEvaluation) {
    ReplayProblem p;
    p.size_m = p.size_i = p.size_j = 1;
    p.post_activation = Activation::identity;
    p.innate_weights = Matrix(1, 2);  // w = 0, bias 0
    p.tau = 1e-5;
    ReplayInstance ri;
    ri.steps = 1;
    ri.a_m = {0.0};
    ri.a_i = {1.0};
    ri.a_j = {0.0};
    ri.final_weights = Matrix(1, 2);
    ri.final_weights(0, 0) = 0.5;  // target output 0.5
    ri.weight = 1.0;
    p.instances.push_back(ri);
    p.precompute_targets();
    ModulatorParams q = oracle::zero_params(p);
    q.fm.b2 = {0.75, 0.0, 0.5, 0.5};  // w_hat = (0.75, 0), beta = 1
    q.fg.b2[0] = -0.1;                // eta = 0.4 -> w~ = 0.3
    const std::size_t h = 0;
    EXPECT_NEAR(guided_loss(q, p, {&h, 1}), 1.0 * (0.2 + 4e-6), 1e-15);

    p.instances[0].weight = 0.5;
    EXPECT_NEAR(guided_loss(q, p, {&h, 1}), 0.5 * (0.2 + 4e-6), 1e-15);
    p.tau_outside = true;
    EXPECT_NEAR(guided_loss(q, p, {&h, 1}), 0.5 * 0.2 + 4e-6, 1e-15);
}

TEST(GuidedLoss, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(oracle::guided_fd_worst_error(seed), 1e-3) << "seed " << seed;
}

TEST(SignSgd, StepDefinition) {
    EXPECT_EQ(sign_step(0.0, 3.7, 0.01), -0.01);
    EXPECT_EQ(sign_step(0.0, -1e-12, 0.01), 0.01);
    EXPECT_EQ(sign_step(0.5, 0.0, 0.01), 0.5);
}

TEST(Split, KeepsProportionAndIsSeeded) {
    GuidedSettings gs;
    Stream a(7), b(7);
    const auto [t1, v1] = split_instances(64, gs, a);
    const auto [t2, v2] = split_instances(64, gs, b);
    EXPECT_EQ(t1.size(), 48u);
    EXPECT_EQ(v1.size(), 16u);
    EXPECT_EQ(t1, t2);
    EXPECT_EQ(v1, v2);
    std::vector<bool> seen(64);
    for (auto k : t1) seen[k] = true;
    for (auto k : v1) seen[k] = true;
    for (bool s : seen) EXPECT_TRUE(s);
}

TEST(GuidedModulatory, InformativeTraceIsFitted) {
    Stream rng(derive_key(11, "informative"));
    const ReplayProblem p = oracle::informative_problem(rng, 64);
    GuidedSettings gs;
    auto [train, val] = split_instances(p.instances.size(), gs, rng);
    const auto res = optimise_modulator(oracle::random_params(p, rng), p, train, val, gs);
    EXPECT_TRUE(res.report.accepted);
    EXPECT_LE(guided_loss(res.params, p, val), 0.5 * res.report.zero_update_validation);
    EXPECT_EQ(guided_loss(res.params, p, val), res.report.best_validation);
    EXPECT_EQ(res.report.train_losses.size(), static_cast<std::size_t>(res.report.epochs));
}

TEST(GuidedModulatory, InformationFreeTraceStalls) {
    Stream rng(derive_key(12, "uninformative"));
    const ReplayProblem p = oracle::information_free_problem(rng, 64);
    GuidedSettings gs;
    auto [train, val] = split_instances(p.instances.size(), gs, rng);
    const auto res = optimise_modulator(oracle::random_params(p, rng), p, train, val, gs);
    EXPECT_TRUE(res.report.stalled);
    EXPECT_LT(res.report.epochs, gs.max_epochs);
    EXPECT_GE(res.report.best_validation, 0.9 * res.report.zero_update_validation);
}

TEST(GuidedModulatory, NonFiniteLossReturnsUnmodified) {
    Stream rng(derive_key(13, "nan"));
    ReplayProblem p = oracle::informative_problem(rng, 8);
    p.instances[0].final_weights.data[0] = std::nan("");
    p.precompute_targets();
    const auto start = oracle::random_params(p, rng);
    std::vector<std::size_t> train{0, 1, 2, 3, 4, 5}, val{6, 7};
    const auto res = optimise_modulator(start, p, train, val, GuidedSettings{});
    EXPECT_FALSE(res.report.accepted);
    EXPECT_EQ(res.params.fm, start.fm);
    EXPECT_EQ(res.params.fg, start.fg);
}

TEST(GuidedModulatory, FitsFromARealLifetimeTrace) {
    Stream rng(derive_key(14, "real"));
    Genotype parent = initial_genotype(rng);
    parent.global_rl_rate = 3.0;
    LifetimeSettings s;
    s.n_trials = 8;
    const auto lr = evaluate_lifetime(parent, make_batch(21, 8), s, 1, true);
    ASSERT_TRUE(lr.trace);
    GuidedSettings gs;
    gs.train_instances = 6;
    gs.validation_instances = 2;
    gs.max_epochs = 30;
    const auto& tp = parent.activatory[1];  // hidden1 -> action
    const auto q = ModulatoryProjection::random(kInputColumn, tp.pre, tp.post, 0.5, rng);
    const auto fit = guided_modulatory(q, parent, *lr.trace, gs, rng);
    ASSERT_TRUE(fit);
    EXPECT_FALSE(validate([&] {
        Genotype g = parent;
        g.modulatory.push_back(fit->first);
        return g;
    }()).has_value());
    EXPECT_GE(fit->second.epochs, 1);
    EXPECT_LE(fit->second.best_validation, fit->second.initial_validation);
}

} // namespace
