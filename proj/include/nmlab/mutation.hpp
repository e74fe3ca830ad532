#pragma once

/// @file mutation.hpp
/// @brief Random and guided mutation operators over genotypes.

#include <algorithm>
#include <optional>
#include <string_view>
#include <vector>

#include "genotype.hpp"
#include "graph.hpp"
#include "guided.hpp"
#include "lifetime.hpp"
#include "rng.hpp"

namespace nmlab {

enum class RunMode { full, rl_only, nm_only, bottlenecked_nm };

inline constexpr std::string_view to_string(RunMode m) noexcept {
    switch (m) {
    case RunMode::full: return "full";
    case RunMode::rl_only: return "rl_only";
    case RunMode::nm_only: return "nm_only";
    case RunMode::bottlenecked_nm: return "bottlenecked_nm";
    }
    return "full";
}

inline std::optional<RunMode> parse_run_mode(std::string_view s) noexcept {
    if (s == "full") return RunMode::full;
    if (s == "rl_only") return RunMode::rl_only;
    if (s == "nm_only") return RunMode::nm_only;
    if (s == "bottlenecked_nm") return RunMode::bottlenecked_nm;
    return std::nullopt;
}

inline bool mode_has_nm(RunMode m) noexcept { return m != RunMode::rl_only; }
inline bool mode_has_rl(RunMode m) noexcept { return m != RunMode::nm_only; }

struct MutationRates {
    double activatory_insert = 0.05;
    double activatory_delete = 0.05;
    double modulatory_insert = 0.05;
    double modulatory_delete = 0.05;
    double activatory_weights = 0.2;  // per projection
    double modulatory_weights = 0.2;  // per projection
    double guided_activatory_fraction = 0.5;
    double guided_modulatory_fraction = 0.5;
    double global_rate = 0.2;
    double global_noise_min = 0.01;  // noise magnitude is log-uniform in [min, max]
    double global_noise_max = 10.0;
    double local_rate = 0.2;  // per projection
    double local_noise_min = 0.01;
    double local_noise_max = 1.0;
    double priority = 0.1;  // per modulatory projection
    double priority_noise = 0.5;
    double weight_noise_min = 1e-3;  // per-mutation magnitude, log-uniform
    double weight_noise_max = 1.0;
    double init_range = 0.5;
    int structural_retries = 20;
    int max_redraws = 100;

    bool any_positive() const noexcept {
        return activatory_insert > 0 || activatory_delete > 0 || modulatory_insert > 0 || modulatory_delete > 0 ||
               activatory_weights > 0 || modulatory_weights > 0 || global_rate > 0 || local_rate > 0 || priority > 0;
    }
};

struct MutationLog {
    int activatory_inserted = 0;
    int activatory_deleted = 0;
    int modulatory_inserted = 0;
    int modulatory_deleted = 0;
    int activatory_noise = 0;
    int activatory_guided = 0;
    int modulatory_noise = 0;
    int modulatory_guided = 0;
    int rate_perturbations = 0;
    int priority_perturbations = 0;
    int rejected_structural = 0;
    std::vector<GuidedLossReport> guided_reports;
};

/// Uniform noise of random magnitude on a random subset of `values`.
template <typename Range>
void random_subset_noise(Range&& values, const MutationRates& r, Stream& rng) {
    const double magnitude = rng.log_uniform(r.weight_noise_min, r.weight_noise_max);
    const double fraction = rng.uniform_open0();
    for (double& v : values) {
        if (rng.uniform() < fraction) v += rng.uniform(-magnitude, magnitude);
    }
}

inline double perturb_rate(double rate, double lo, double hi, Stream& rng) {
    const double m = rng.log_uniform(lo, hi);
    return std::max(0.0, rate + rng.uniform(-m, m));
}

/// Attempt to add pre -> post. Rejects invalid endpoints, duplicates and cycles.
inline bool try_insert_activatory(Genotype& g, int pre, int post, double init_range, Stream& rng) {
    if (pre < 0 || pre >= kNumColumns || post < 0 || post >= kNumColumns) return false;
    if (!valid_pre_column(pre) || !valid_post_column(post) || pre == post) return false;
    if (g.find_activatory(pre, post) || creates_cycle(g, pre, post)) return false;
    ActivatoryProjection p;
    p.pre = pre;
    p.post = post;
    p.weights = random_uniform_matrix(column_size(post), column_size(pre) + 1, -init_range, init_range, rng);
    g.activatory.push_back(std::move(p));
    return true;
}

struct MutationContext {
    const LearningTrace* parent_trace = nullptr;
    const GuidedSettings* guided = nullptr;
    RunMode mode = RunMode::full;
};

namespace detail {

inline void mutation_pass(const Genotype& parent, Genotype& g, const MutationRates& r, const MutationContext& ctx,
                          Stream& rng, MutationLog& log) {
    const bool nm = mode_has_nm(ctx.mode);
    const bool rl = mode_has_rl(ctx.mode);
    const bool bottlenecked = ctx.mode == RunMode::bottlenecked_nm;
    const bool can_guide = ctx.parent_trace != nullptr && ctx.guided != nullptr;

    // Modulatory MLP weights.
    if (nm) {
        for (auto& q : g.modulatory) {
            if (!rng.bernoulli(r.modulatory_weights)) continue;
            if (can_guide && rng.bernoulli(r.guided_modulatory_fraction)) {
                if (auto fit = guided_modulatory(q, g, *ctx.parent_trace, *ctx.guided, rng)) {
                    q = std::move(fit->first);
                    log.guided_reports.push_back(std::move(fit->second));
                    ++log.modulatory_guided;
                    continue;
                }
            }
            std::vector<double*> params;
            q.fm.for_each_param([&](double& v) { params.push_back(&v); });
            q.fg.for_each_param([&](double& v) { params.push_back(&v); });
            const double magnitude = rng.log_uniform(r.weight_noise_min, r.weight_noise_max);
            const double fraction = rng.uniform_open0();
            for (double* v : params) {
                if (rng.uniform() < fraction) *v += rng.uniform(-magnitude, magnitude);
            }
            ++log.modulatory_noise;
        }
    }

    // Activatory weight matrices.
    for (std::size_t k = 0; k < g.activatory.size(); ++k) {
        auto& p = g.activatory[k];
        if (!rng.bernoulli(r.activatory_weights)) continue;
        if (can_guide && rng.bernoulli(r.guided_activatory_fraction)) {
            const auto pk = parent.find_activatory(p.pre, p.post);
            if (pk) {
                if (auto mean = mean_final_weights(*ctx.parent_trace, *pk)) {
                    p.weights = guided_activatory(p.weights, *mean, rng.uniform());
                    ++log.activatory_guided;
                    continue;
                }
            }
        }
        random_subset_noise(p.weights.data, r, rng);
        ++log.activatory_noise;
    }

    // RL learning rates.
    if (rl) {
        if (rng.bernoulli(r.global_rate)) {
            g.global_rl_rate = perturb_rate(g.global_rl_rate, r.global_noise_min, r.global_noise_max, rng);
            ++log.rate_perturbations;
        }
        for (auto& p : g.activatory) {
            if (rng.bernoulli(r.local_rate)) {
                p.local_rl_rate = perturb_rate(p.local_rl_rate, r.local_noise_min, r.local_noise_max, rng);
                ++log.rate_perturbations;
            }
        }
    }

    // Priorities.
    for (auto& q : g.modulatory) {
        if (rng.bernoulli(r.priority)) {
            q.priority += rng.uniform(-r.priority_noise, r.priority_noise);
            ++log.priority_perturbations;
        }
    }

    // Modulatory structure.
    if (nm) {
        if (rng.bernoulli(r.modulatory_insert)) {
            const ActiveGraph ag = prune_graph(g);
            std::vector<int> sources;
            for (int c = 0; c < kNumColumns; ++c) {
                if (ag.column[static_cast<std::size_t>(c)] && eligible_modulator(c, bottlenecked)) sources.push_back(c);
            }
            std::vector<std::size_t> targets;
            for (std::size_t k = 0; k < g.activatory.size(); ++k) {
                if (ag.activatory[k]) targets.push_back(k);
            }
            if (!sources.empty() && !targets.empty()) {
                const int m = sources[rng.index(sources.size())];
                const auto& tp = g.activatory[targets[rng.index(targets.size())]];
                auto q = ModulatoryProjection::random(m, tp.pre, tp.post, r.init_range, rng);
                if (can_guide) {
                    if (auto fit = guided_modulatory(q, g, *ctx.parent_trace, *ctx.guided, rng)) {
                        q = std::move(fit->first);
                        log.guided_reports.push_back(std::move(fit->second));
                    }
                }
                g.modulatory.push_back(std::move(q));
                ++log.modulatory_inserted;
            } else {
                ++log.rejected_structural;
            }
        }
        if (!g.modulatory.empty() && rng.bernoulli(r.modulatory_delete)) {
            g.modulatory.erase(g.modulatory.begin() + static_cast<std::ptrdiff_t>(rng.index(g.modulatory.size())));
            ++log.modulatory_deleted;
        }
    }

    // Activatory structure.
    if (rng.bernoulli(r.activatory_insert)) {
        bool done = false;
        for (int attempt = 0; attempt < r.structural_retries && !done; ++attempt) {
            const int pre = static_cast<int>(rng.index(kNumColumns));
            const int post = static_cast<int>(rng.index(kNumColumns));
            done = try_insert_activatory(g, pre, post, r.init_range, rng);
            if (!done) ++log.rejected_structural;
        }
        if (done) ++log.activatory_inserted;
    }
    if (!g.activatory.empty() && rng.bernoulli(r.activatory_delete)) {
        g.activatory.erase(g.activatory.begin() + static_cast<std::ptrdiff_t>(rng.index(g.activatory.size())));
        drop_orphaned_modulation(g);
        ++log.activatory_deleted;
    }
}

} // namespace detail

/// Produce one offspring. Passes are repeated until the offspring differs
/// from the parent (bounded by max_redraws), unless every rate is zero.
inline Genotype mutate(const Genotype& parent, const MutationRates& r, const MutationContext& ctx, Stream& rng,
                       MutationLog* log = nullptr) {
    MutationLog local;
    MutationLog& lg = log ? *log : local;
    Genotype g = parent;
    if (!r.any_positive()) return g;
    for (int pass = 0; pass < std::max(1, r.max_redraws); ++pass) {
        detail::mutation_pass(parent, g, r, ctx, rng, lg);
        if (!(g == parent)) break;
    }
    return g;
}

} // namespace nmlab
