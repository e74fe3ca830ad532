#pragma once

/// @file lifetime.hpp
/// @brief Lifetime evaluation of a genotype on a batch of task instances:
/// per-instance learning from the innate state, learning traces for guided
/// mutation, weight-modification accounting and optional trajectory records.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "a2c.hpp"
#include "parallel.hpp"
#include "phenotype.hpp"
#include "rng.hpp"
#include "task.hpp"

namespace nmlab {

/// Worst-case per-trial reward assigned after a numerical divergence.
inline constexpr double kDivergedReward = -1.0;

struct LifetimeSettings {
    int n_trials = 50;
    int steps_per_trial = kDefaultStepsPerTrial;
    bool nm_enabled = true;
    bool rl_enabled = true;
    A2CConfig a2c{};
};

/// A set of task instances shared by every individual evaluated on it. Trial
/// targets and action noise are drawn from streams keyed by (batch key,
/// instance index), so all individuals face identical conditions.
struct Batch {
    std::uint64_t key = 0;
    std::vector<TaskInstance> instances;

    std::size_t size() const noexcept { return instances.size(); }
    Stream target_stream(std::size_t h) const noexcept { return Stream(derive_key(key, "targets", {h})); }
    Stream action_stream(std::size_t h) const noexcept { return Stream(derive_key(key, "actions", {h})); }
};

inline Batch make_batch(std::uint64_t key, std::size_t n) {
    Batch b;
    b.key = key;
    b.instances.reserve(n);
    for (std::size_t h = 0; h < n; ++h) {
        Stream rng(derive_key(key, "rotation", {h}));
        b.instances.push_back(create_instance(rng));
    }
    return b;
}

/// Recorded activity of one instance: activations of every active column at
/// every timestep (float precision), final weights, and the mean reward of
/// the last five trials.
struct InstanceTrace {
    std::size_t steps = 0;
    std::array<std::vector<float>, kNumColumns> activations;  // steps * size(c); empty when inactive
    std::vector<Matrix> final_weights;                        // parallel to Genotype::activatory
    double last5_reward = 0.0;
    bool diverged = false;

    std::span<const float> activation(int c, std::size_t t) const noexcept {
        const auto n = column_size(c);
        return {activations[static_cast<std::size_t>(c)].data() + t * n, n};
    }
    bool has_column(int c) const noexcept { return !activations[static_cast<std::size_t>(c)].empty(); }
};

struct LearningTrace {
    std::vector<InstanceTrace> instances;
};

struct TrajectoryStep {
    Vec2 agent_pos{};
    Vec2 action_mean{};
    Vec2 action_sd{};
    Vec2 target_pos{};
};

struct InstanceResult {
    std::vector<double> trial_rewards;
    double rl_weight_change_l1 = 0.0;
    double nm_weight_change_l1 = 0.0;
    bool diverged = false;
    std::optional<InstanceTrace> trace;
    std::vector<TrajectoryStep> trajectory;  // filled only for requested trials
};

struct EvaluationRequest {
    bool record_trace = false;
    int trajectory_trials = 0;  // record per-step positions for the first k trials
};

inline InstanceResult evaluate_instance(const Genotype& genotype, const Batch& batch, std::size_t h,
                                        const LifetimeSettings& s, const EvaluationRequest& req = {}) {
    const TaskInstance& inst = batch.instances[h];
    Stream target_rng = batch.target_stream(h);
    Stream noise_rng = batch.action_stream(h);

    Phenotype ph(genotype);
    OptimizerState opt;
    opt.reset(ph);
    const bool run_nm = s.nm_enabled && ph.has_active_modulation();
    const bool run_rl = s.rl_enabled && genotype.global_rl_rate > 0.0;

    InstanceResult res;
    res.trial_rewards.assign(static_cast<std::size_t>(s.n_trials), kDivergedReward);
    const std::size_t total_steps = static_cast<std::size_t>(s.n_trials) * static_cast<std::size_t>(s.steps_per_trial);
    if (req.record_trace) {
        res.trace.emplace();
        res.trace->steps = total_steps;
        for (int c = 0; c < kNumColumns; ++c) {
            if (ph.graph().column[static_cast<std::size_t>(c)])
                res.trace->activations[static_cast<std::size_t>(c)].reserve(total_steps * column_size(c));
        }
    }

    RolloutBuffer buffer;
    buffer.steps.reserve(static_cast<std::size_t>(s.steps_per_trial));
    int trial = 0;
    try {
        for (; trial < s.n_trials; ++trial) {
            TrialState st = begin_trial(inst, target_rng, s.steps_per_trial);
            Vec2 prev_rel{0.0, 0.0};
            Vec2 prev_action{0.0, 0.0};
            buffer.clear();
            for (int t = 0; t < s.steps_per_trial; ++t) {
                const Observation obs = observe(st, inst, prev_rel, prev_action);
                const auto x = obs.flatten();
                const PolicyOutput out = ph.forward(x);
                if (res.trace) {
                    for (int c : ph.graph().order) {
                        auto& dst = res.trace->activations[static_cast<std::size_t>(c)];
                        for (double v : ph.activation(c)) dst.push_back(static_cast<float>(v));
                    }
                }
                if (trial < req.trajectory_trials) {
                    res.trajectory.push_back({st.agent_pos, out.mean, out.sd, st.target_pos});
                }
                const ActionSample a = sample_action(out.mean, out.sd, noise_rng);
                if (run_nm) ph.nm_step();
                st = apply_action(st, a.raw);
                const double r = trial_reward(st);
                if (run_rl) buffer.steps.push_back({x, a.raw, a.log_density, a.entropy, out.value, r});
                prev_rel = obs.current_rel;
                prev_action = clip_to_unit_circle(a.raw);
            }
            res.trial_rewards[static_cast<std::size_t>(trial)] = trial_reward(st);
            if (run_rl) {
                buffer.terminal = true;
                const auto returns = compute_returns(buffer, s.a2c.gamma);
                auto back = a2c_backward(ph, buffer, returns, s.a2c);
                apply_rl_update(ph, std::move(back.grads), opt, s.a2c, genotype.global_rl_rate);
            }
        }
    } catch (const DivergenceError&) {
        res.diverged = true;
        for (int k = trial; k < s.n_trials; ++k) res.trial_rewards[static_cast<std::size_t>(k)] = kDivergedReward;
    }

    res.rl_weight_change_l1 = ph.rl_weight_change_l1;
    res.nm_weight_change_l1 = ph.nm_weight_change_l1;
    if (res.trace) {
        res.trace->diverged = res.diverged;
        res.trace->final_weights = ph.weights();
        const int first = std::max(0, s.n_trials - 5);
        double acc = 0.0;
        for (int k = first; k < s.n_trials; ++k) acc += res.trial_rewards[static_cast<std::size_t>(k)];
        res.trace->last5_reward = acc / std::max(1, s.n_trials - first);
    }
    return res;
}

struct LifetimeResult {
    double fitness = 0.0;
    std::vector<double> trial_profile;  // mean reward per trial index across instances
    double rl_weight_change_l1 = 0.0;   // summed over the lifetime, averaged over instances
    double nm_weight_change_l1 = 0.0;
    std::size_t diverged_instances = 0;
    std::optional<LearningTrace> trace;
};

/// Fixed-order reduction of per-instance results.
inline LifetimeResult combine_instances(std::vector<InstanceResult>&& per_instance, int n_trials) {
    LifetimeResult lr;
    lr.trial_profile.assign(static_cast<std::size_t>(n_trials), 0.0);
    const double inv_h = 1.0 / static_cast<double>(per_instance.size());
    double total = 0.0;
    bool traced = !per_instance.empty() && per_instance.front().trace.has_value();
    if (traced) lr.trace.emplace();
    for (auto& r : per_instance) {
        for (std::size_t k = 0; k < r.trial_rewards.size(); ++k) {
            lr.trial_profile[k] += r.trial_rewards[k];
            total += r.trial_rewards[k];
        }
        lr.rl_weight_change_l1 += r.rl_weight_change_l1;
        lr.nm_weight_change_l1 += r.nm_weight_change_l1;
        lr.diverged_instances += r.diverged;
        if (traced) lr.trace->instances.push_back(std::move(*r.trace));
    }
    for (double& v : lr.trial_profile) v *= inv_h;
    lr.fitness = total / (static_cast<double>(per_instance.size()) * n_trials);
    lr.rl_weight_change_l1 *= inv_h;
    lr.nm_weight_change_l1 *= inv_h;
    return lr;
}

inline LifetimeResult evaluate_lifetime(const Genotype& genotype, const Batch& batch, const LifetimeSettings& s,
                                        int threads = 1, bool record_trace = false) {
    std::vector<InstanceResult> per(batch.size());
    EvaluationRequest req;
    req.record_trace = record_trace;
    parallel_for(batch.size(), threads, [&](std::size_t h) { per[h] = evaluate_instance(genotype, batch, h, s, req); });
    return combine_instances(std::move(per), s.n_trials);
}

} // namespace nmlab
