#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace nmlab;

namespace {

EvolutionConfig tiny_config(std::uint64_t seed = 3) {
    EvolutionConfig c;
    c.population_size = 6;
    c.parent_pool = 3;
    c.elite_pool = 1;
    c.n_instances = 4;
    c.focal_instances = 4;
    c.n_trials = 3;
    c.generations = 2;
    c.guided.train_instances = 3;
    c.guided.validation_instances = 1;
    c.guided.max_epochs = 5;
    c.master_seed = seed;
    return c;
}

TEST(Lifetime, NoLearningMatchesDisabledLearning) {
    Stream rng(derive_key(1, "nolearn"));
    const Genotype g = initial_genotype(rng);  // global rate 0, no modulation
    LifetimeSettings on, off;
    on.n_trials = off.n_trials = 5;
    off.nm_enabled = off.rl_enabled = false;
    const Batch b = make_batch(4, 6);
    const auto a = evaluate_lifetime(g, b, on, 1);
    const auto z = evaluate_lifetime(g, b, off, 1);
    EXPECT_EQ(a.fitness, z.fitness);
    EXPECT_EQ(a.trial_profile, z.trial_profile);
    EXPECT_EQ(a.rl_weight_change_l1, 0.0);
    EXPECT_EQ(a.nm_weight_change_l1, 0.0);
}

TEST(Lifetime, ThreadCountDoesNotChangeResults) {
    Stream rng(derive_key(2, "threads"));
    const Genotype g = oracle::random_genotype(rng, 10);
    LifetimeSettings s;
    s.n_trials = 6;
    const Batch b = make_batch(9, 8);
    const auto one = evaluate_lifetime(g, b, s, 1);
    for (int t : {2, 4, 8}) {
        const auto many = evaluate_lifetime(g, b, s, t);
        EXPECT_EQ(one.fitness, many.fitness);
        EXPECT_EQ(one.trial_profile, many.trial_profile);
        EXPECT_EQ(one.rl_weight_change_l1, many.rl_weight_change_l1);
    }
}

TEST(Lifetime, PerfectControllerScoresNearOne) {
    for (double angle : {0.0, 1.0, 2.5, 4.0}) {
        Batch b;
        b.key = 17;
        b.instances = {TaskInstance::with_angle(angle)};
        LifetimeSettings s;
        s.n_trials = 20;
        const auto r = evaluate_lifetime(oracle::perfect_controller(angle), b, s, 1);
        EXPECT_GE(r.fitness, 0.99) << angle;
    }
}

TEST(Lifetime, FitnessIsMeanOfProfile) {
    Stream rng(derive_key(5, "profile"));
    const Genotype g = oracle::random_genotype(rng, 6);
    LifetimeSettings s;
    s.n_trials = 7;
    const auto r = evaluate_lifetime(g, make_batch(3, 5), s, 1);
    ASSERT_EQ(r.trial_profile.size(), 7u);
    EXPECT_NEAR(window_mean(r.trial_profile, 0, 7), r.fitness, 1e-12);
}

TEST(Selection, TiesKeepIndexOrder) {
    const std::vector<std::size_t> expect{1, 3, 0, 2, 4};
    EXPECT_EQ(rank_by_fitness({0.5, 0.7, 0.5, 0.7, 0.1}), expect);
}

TEST(Selection, ElitesAreCopiedAndOffspringDiffer) {
    EvolutionConfig c;
    c.population_size = 105;
    c.elite_pool = 5;
    c.parent_pool = 25;
    c.master_seed = 8;
    const auto parents = initial_population(c);
    std::vector<Genotype> pool(parents.begin(), parents.begin() + 25);
    const auto next = next_generation(pool, {}, c, 0, 2);
    ASSERT_EQ(next.size(), 105u);
    for (std::size_t e = 0; e < 5; ++e) EXPECT_EQ(serialize_genotype(next[e]), serialize_genotype(pool[e]));
    int differing = 0;
    for (std::size_t k = 5; k < next.size(); ++k) {
        bool equal_to_some = false;
        for (const auto& p : pool) equal_to_some = equal_to_some || next[k] == p;
        differing += !equal_to_some;
        EXPECT_FALSE(validate(next[k]).has_value());
    }
    EXPECT_GE(differing, 95);
    EXPECT_EQ(serialize_genotype(next_generation(pool, {}, c, 0, 1)[40]), serialize_genotype(next[40]));
}

TEST(Selection, EliteCloneReproducesItsFitnessOnTheSameBatch) {
    const EvolutionConfig c = tiny_config();
    const auto pop = initial_population(c);
    const Batch b = selection_batch(c, 0);
    const auto ev = evaluate_population(pop, b, c.lifetime(), 1, false);
    const auto order = rank_by_fitness(ev.fitness);
    std::vector<Genotype> parents;
    for (std::size_t k = 0; k < c.parent_pool; ++k) parents.push_back(pop[order[k]]);
    const auto next = next_generation(parents, {}, c, 0, 1);
    const auto again = evaluate_population(next, b, c.lifetime(), 1, false);
    EXPECT_EQ(again.fitness[0], ev.fitness[order[0]]);
    EXPECT_GE(*std::max_element(again.fitness.begin(), again.fitness.end()), ev.fitness[order[0]]);
}

TEST(Mutation, ZeroRatesGiveIdentity) {
    MutationRates r{};
    r.activatory_insert = r.activatory_delete = r.modulatory_insert = r.modulatory_delete = 0;
    r.activatory_weights = r.modulatory_weights = r.global_rate = r.local_rate = r.priority = 0;
    Stream rng(derive_key(3, "zero"));
    const Genotype g = oracle::random_genotype(rng, 8);
    EXPECT_EQ(mutate(g, r, {}, rng), g);
}

TEST(Mutation, GlobalRateLeavesZero) {
    MutationRates r{};
    r.activatory_insert = r.activatory_delete = r.modulatory_insert = r.modulatory_delete = 0;
    r.activatory_weights = r.modulatory_weights = r.local_rate = r.priority = 0;
    r.global_rate = 1.0;
    Stream rng(derive_key(4, "global"));
    Genotype g = initial_genotype(rng);
    int positive = 0;
    for (int k = 0; k < 100; ++k) {
        const auto child = mutate(g, r, {}, rng);
        EXPECT_GE(child.global_rl_rate, 0.0);
        positive += child.global_rl_rate > 0.0;
    }
    EXPECT_GT(positive, 50);
}

TEST(Mutation, InsertionRejectsInvalidEdges) {
    Stream rng(derive_key(5, "insert"));
    Genotype g = initial_genotype(rng);
    EXPECT_FALSE(try_insert_activatory(g, kFirstHidden, kInputColumn, 0.5, rng));
    EXPECT_FALSE(try_insert_activatory(g, kActionColumn, kFirstHidden, 0.5, rng));
    EXPECT_FALSE(try_insert_activatory(g, kInputColumn, kFirstHidden, 0.5, rng));  // duplicate
    EXPECT_FALSE(try_insert_activatory(g, 3, 3, 0.5, rng));
    ASSERT_TRUE(try_insert_activatory(g, 3, 4, 0.5, rng));
    EXPECT_FALSE(try_insert_activatory(g, 4, 3, 0.5, rng));  // cycle
    EXPECT_FALSE(validate(g).has_value());
}

TEST(Mutation, InvariantsHoldOverLongChains) {
    MutationRates r{};
    r.activatory_insert = r.activatory_delete = r.modulatory_insert = r.modulatory_delete = 0.3;
    Stream rng(derive_key(6, "chain"));
    Genotype g = initial_genotype(rng);
    std::size_t max_mods = 0;
    for (int k = 0; k < 100000; ++k) {
        if (k % 2000 == 0) g = initial_genotype(rng);
        g = mutate(g, r, {}, rng);
        ASSERT_FALSE(validate(g).has_value()) << k << ": " << *validate(g);
        ASSERT_GE(g.global_rl_rate, 0.0);
        for (const auto& p : g.activatory) {
            ASSERT_GE(p.local_rl_rate, 0.0);
            for (double v : p.weights.data) ASSERT_TRUE(std::isfinite(v));
        }
        for (const auto& q : g.modulatory) ASSERT_TRUE(g.find_activatory(q.target_pre, q.target_post));
        max_mods = std::max(max_mods, g.modulatory.size());
    }
    EXPECT_GT(max_mods, 0u);
}

TEST(Mutation, ModesStayPure) {
    MutationRates r{};
    r.modulatory_insert = 0.5;
    for (RunMode mode : {RunMode::rl_only, RunMode::nm_only, RunMode::bottlenecked_nm}) {
        Stream rng(derive_key(7, "mode", {static_cast<std::uint64_t>(mode)}));
        Genotype g = initial_genotype(rng);
        MutationContext ctx;
        ctx.mode = mode;
        for (int k = 0; k < 3000; ++k) {
            if (k % 300 == 0) g = initial_genotype(rng);
            g = mutate(g, r, ctx, rng);
            if (mode == RunMode::rl_only) {
                ASSERT_TRUE(g.modulatory.empty());
            }
            if (mode == RunMode::nm_only) {
                ASSERT_EQ(g.global_rl_rate, 0.0);
                for (const auto& p : g.activatory) ASSERT_EQ(p.local_rl_rate, 1.0);
            }
            if (mode == RunMode::bottlenecked_nm) {
                for (const auto& q : g.modulatory) ASSERT_TRUE(eligible_modulator(q.modulating, true));
                ASSERT_FALSE(validate(g, true).has_value());
            }
        }
    }
}

TEST(Evolution, RunIsThreadInvariant) {
    Evolution a(tiny_config(), 1), b(tiny_config(), 3);
    a.run();
    b.run();
    EXPECT_EQ(a.state().history, b.state().history);
    EXPECT_EQ(a.state().population, b.state().population);
    EXPECT_EQ(a.state().generation, 2u);
}

TEST(Evolution, ChampionIsNextElite) {
    Evolution e(tiny_config(5), 1);
    e.step();
    EXPECT_EQ(e.state().champion, e.state().population.front());
}

TEST(Evolution, ConfigValidation) {
    EvolutionConfig c = tiny_config();
    EXPECT_FALSE(validate(c).has_value());
    c.parent_pool = 10;
    EXPECT_TRUE(validate(c).has_value());
    c = tiny_config();
    c.elite_pool = 4;
    EXPECT_TRUE(validate(c).has_value());
    c = tiny_config();
    c.guided.train_instances = 2;
    EXPECT_TRUE(validate(c).has_value());
}

} // namespace
