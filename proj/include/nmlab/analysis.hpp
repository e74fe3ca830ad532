#pragma once

/// @file analysis.hpp
/// @brief Measurement suite: focal-individual ablations, per-trial learning
/// curves and first-trial trajectory dumps.

#include <algorithm>
#include <limits>
#include <vector>

#include "lifetime.hpp"
#include "rng.hpp"

namespace nmlab {

struct FocalReport {
    std::size_t generation = 0;
    double regular = 0.0;
    double nm_only = 0.0;  // RL disabled
    double rl_only = 0.0;  // NM disabled
    double rl_weight_change_l1 = 0.0;
    double nm_weight_change_l1 = 0.0;
    std::vector<double> profile;  // regular run, mean reward per trial index
};

/// Three evaluations of the same genotype on the same batch: everything on,
/// NM off, RL off. Accounting comes from the all-on run.
inline FocalReport focal_report(const Genotype& champion, const Batch& fresh_batch, const LifetimeSettings& base,
                                int threads = 1) {
    LifetimeSettings s = base;
    s.nm_enabled = s.rl_enabled = true;
    const LifetimeResult regular = evaluate_lifetime(champion, fresh_batch, s, threads);
    s.nm_enabled = false;
    const LifetimeResult no_nm = evaluate_lifetime(champion, fresh_batch, s, threads);
    s.nm_enabled = true;
    s.rl_enabled = false;
    const LifetimeResult no_rl = evaluate_lifetime(champion, fresh_batch, s, threads);

    FocalReport rep;
    rep.regular = regular.fitness;
    rep.rl_only = no_nm.fitness;
    rep.nm_only = no_rl.fitness;
    rep.rl_weight_change_l1 = regular.rl_weight_change_l1;
    rep.nm_weight_change_l1 = regular.nm_weight_change_l1;
    rep.profile = regular.trial_profile;
    return rep;
}

struct LearningCurve {
    std::vector<double> mean;  // per trial index, across instances
    std::vector<double> min;
    std::vector<double> max;
    std::size_t diverged_instances = 0;
};

inline LearningCurve learning_curve(const Genotype& g, const Batch& batch, const LifetimeSettings& s,
                                    int threads = 1) {
    std::vector<InstanceResult> per(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t h) { per[h] = evaluate_instance(g, batch, h, s); });
    const auto n = static_cast<std::size_t>(s.n_trials);
    LearningCurve c;
    c.mean.assign(n, 0.0);
    c.min.assign(n, std::numeric_limits<double>::infinity());
    c.max.assign(n, -std::numeric_limits<double>::infinity());
    for (const auto& r : per) {
        c.diverged_instances += r.diverged;
        for (std::size_t k = 0; k < n; ++k) {
            c.mean[k] += r.trial_rewards[k];
            c.min[k] = std::min(c.min[k], r.trial_rewards[k]);
            c.max[k] = std::max(c.max[k], r.trial_rewards[k]);
        }
    }
    for (double& v : c.mean) v /= static_cast<double>(per.size());
    return c;
}

/// First trial index (0-based) at which the curve reaches `threshold`, or -1.
inline long first_trial_reaching(const std::vector<double>& curve, double threshold) {
    for (std::size_t k = 0; k < curve.size(); ++k) {
        if (curve[k] >= threshold) return static_cast<long>(k);
    }
    return -1;
}

/// Mean of curve[from, to), clamped to the curve length.
inline double window_mean(const std::vector<double>& curve, std::size_t from, std::size_t to) {
    to = std::min(to, curve.size());
    if (from >= to) return 0.0;
    double acc = 0.0;
    for (std::size_t k = from; k < to; ++k) acc += curve[k];
    return acc / static_cast<double>(to - from);
}

struct TrajectoryTrace {
    std::size_t instances = 0;
    std::size_t steps_per_instance = 0;
    std::vector<TrajectoryStep> steps;  // instance-major
};

/// Per-step record of the first `n_trials` trials on a fixed instance set
/// generated from `seed`.
inline TrajectoryTrace trajectory_dump(const Genotype& g, std::uint64_t seed, std::size_t n_instances,
                                       int n_trials, const LifetimeSettings& base) {
    const Batch batch = make_batch(derive_key(seed, "trajectory-batch"), n_instances);
    LifetimeSettings s = base;
    s.n_trials = n_trials;
    EvaluationRequest req;
    req.trajectory_trials = n_trials;
    TrajectoryTrace tr;
    tr.instances = n_instances;
    tr.steps_per_instance = static_cast<std::size_t>(n_trials * s.steps_per_trial);
    for (std::size_t h = 0; h < n_instances; ++h) {
        const auto r = evaluate_instance(g, batch, h, s, req);
        tr.steps.insert(tr.steps.end(), r.trajectory.begin(), r.trajectory.end());
        // Diverged runs stop early; pad so every instance has the same length.
        for (std::size_t k = r.trajectory.size(); k < tr.steps_per_instance; ++k) tr.steps.push_back(r.trajectory.empty() ? TrajectoryStep{} : r.trajectory.back());
    }
    return tr;
}

inline double mean_action_sd(const TrajectoryTrace& tr) {
    if (tr.steps.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : tr.steps) acc += 0.5 * (s.action_sd[0] + s.action_sd[1]);
    return acc / static_cast<double>(tr.steps.size());
}

} // namespace nmlab
