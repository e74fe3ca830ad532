#pragma once

/// @file evolution.hpp
/// @brief Generational loop: shared-batch lifetime evaluation, truncation
/// selection with elitism, mutation with parent traces, focal reporting.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "graph.hpp"
#include "lifetime.hpp"
#include "mutation.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace nmlab {

struct EvolutionConfig {
    std::size_t population_size = 100;
    std::size_t generations = 1500;
    std::size_t parent_pool = 25;
    std::size_t elite_pool = 5;
    std::size_t n_instances = 64;
    int n_trials = 50;
    int steps_per_trial = kDefaultStepsPerTrial;
    std::size_t focal_instances = 64;
    RunMode mode = RunMode::full;
    MutationRates mutation{};
    GuidedSettings guided{};
    A2CConfig a2c{};
    double init_range = 0.5;
    std::uint64_t master_seed = 1;
    std::size_t checkpoint_interval = 10;

    LifetimeSettings lifetime() const {
        LifetimeSettings s;
        s.n_trials = n_trials;
        s.steps_per_trial = steps_per_trial;
        s.nm_enabled = mode_has_nm(mode);
        s.rl_enabled = mode_has_rl(mode);
        s.a2c = a2c;
        return s;
    }
};

/// First violated invariant of the configuration, or nullopt.
inline std::optional<std::string> validate(const EvolutionConfig& c) {
    if (c.population_size == 0) return "population_size must be positive";
    if (c.parent_pool == 0 || c.parent_pool > c.population_size) return "parent_pool must be in [1, population_size]";
    if (c.elite_pool > c.parent_pool) return "elite_pool must not exceed parent_pool";
    if (c.n_instances == 0) return "n_instances must be positive";
    if (c.focal_instances == 0) return "focal_instances must be positive";
    if (c.n_trials <= 0) return "n_trials must be positive";
    if (c.steps_per_trial <= 0) return "steps_per_trial must be positive";
    if (c.guided.train_instances + c.guided.validation_instances != c.n_instances)
        return "guided train and validation split must sum to n_instances";
    if (c.guided.train_instances == 0 || c.guided.validation_instances == 0)
        return "guided train and validation sets must be non-empty";
    if (c.guided.max_epochs < 1 || c.guided.stall_patience < 1) return "guided epochs and patience must be positive";
    if (c.a2c.update_interval != c.steps_per_trial) return "a2c update_interval must equal steps_per_trial";
    return std::nullopt;
}

/// Metrics recorded once per generation.
struct GenerationRow {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    FocalReport focal;
    double champion_global_rl_rate = 0.0;
    std::size_t champion_active_columns = 0;
    std::size_t champion_active_activatory = 0;
    std::size_t champion_active_modulatory = 0;
    std::size_t diverged_instances = 0;
    std::size_t guided_fits = 0;
    std::size_t guided_accepted = 0;

    friend bool operator==(const GenerationRow&, const GenerationRow&) = default;
};

inline bool operator==(const FocalReport& a, const FocalReport& b) {
    return a.generation == b.generation && a.regular == b.regular && a.nm_only == b.nm_only &&
           a.rl_only == b.rl_only && a.rl_weight_change_l1 == b.rl_weight_change_l1 &&
           a.nm_weight_change_l1 == b.nm_weight_change_l1 && a.profile == b.profile;
}

inline std::vector<Genotype> initial_population(const EvolutionConfig& c) {
    std::vector<Genotype> pop;
    pop.reserve(c.population_size);
    for (std::size_t i = 0; i < c.population_size; ++i) {
        Stream rng = make_stream(c.master_seed, "init", {i});
        pop.push_back(initial_genotype(rng, c.init_range));
    }
    return pop;
}

/// Indices sorted by descending fitness; ties keep index order.
inline std::vector<std::size_t> rank_by_fitness(const std::vector<double>& fitness) {
    std::vector<std::size_t> idx(fitness.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    return idx;
}

struct EvaluatedPopulation {
    std::vector<LifetimeResult> results;  // parallel to the population
    std::vector<double> fitness;
};

/// Evaluate every (individual, instance) cell of a shared batch.
inline EvaluatedPopulation evaluate_population(const std::vector<Genotype>& pop, const Batch& batch,
                                               const LifetimeSettings& s, int threads, bool record_trace) {
    const std::size_t n = batch.size();
    std::vector<InstanceResult> cells(pop.size() * n);
    EvaluationRequest req;
    req.record_trace = record_trace;
    parallel_for(cells.size(), threads, [&](std::size_t k) { cells[k] = evaluate_instance(pop[k / n], batch, k % n, s, req); });
    EvaluatedPopulation ev;
    ev.results.reserve(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        std::vector<InstanceResult> per(std::make_move_iterator(cells.begin() + static_cast<std::ptrdiff_t>(i * n)),
                                        std::make_move_iterator(cells.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
        ev.results.push_back(combine_instances(std::move(per), s.n_trials));
        ev.fitness.push_back(ev.results.back().fitness);
    }
    return ev;
}

/// Elites copied unchanged, remaining slots filled by mutating parents drawn
/// uniformly from the parent pool. `traces[k]` belongs to `parents[k]`.
inline std::vector<Genotype> next_generation(const std::vector<Genotype>& parents,
                                             const std::vector<const LearningTrace*>& traces,
                                             const EvolutionConfig& c, std::size_t generation, int threads,
                                             std::vector<MutationLog>* logs = nullptr) {
    std::vector<Genotype> next(c.population_size);
    for (std::size_t e = 0; e < c.elite_pool; ++e) next[e] = parents[e];
    const std::size_t n_off = c.population_size - c.elite_pool;
    std::vector<MutationLog> local(n_off);
    parallel_for(n_off, threads, [&](std::size_t k) {
        const std::size_t slot = c.elite_pool + k;
        Stream rng = make_stream(c.master_seed, "offspring", {generation, slot});
        const std::size_t p = rng.index(parents.size());
        MutationContext ctx;
        ctx.parent_trace = traces.empty() ? nullptr : traces[p];
        ctx.guided = &c.guided;
        ctx.mode = c.mode;
        next[slot] = mutate(parents[p], c.mutation, ctx, rng, &local[k]);
    });
    if (logs) *logs = std::move(local);
    return next;
}

inline Batch selection_batch(const EvolutionConfig& c, std::size_t generation) {
    return make_batch(derive_key(c.master_seed, "selection-batch", {generation}), c.n_instances);
}

inline Batch focal_batch(const EvolutionConfig& c, std::size_t generation) {
    return make_batch(derive_key(c.master_seed, "focal-batch", {generation}), c.focal_instances);
}

/// Complete state of a run between generations. Every random draw is keyed by
/// (master seed, purpose, generation, slot), so this is all a resume needs.
struct EvolutionState {
    std::size_t generation = 0;  // generations completed
    std::vector<Genotype> population;
    std::vector<GenerationRow> history;
    Genotype champion;  // fittest of the last completed generation
};

class Evolution {
public:
    explicit Evolution(EvolutionConfig config, int threads = 1) : config_(std::move(config)), threads_(threads) {
        state_.population = initial_population(config_);
    }

    Evolution(EvolutionConfig config, EvolutionState state, int threads = 1)
        : config_(std::move(config)), threads_(threads), state_(std::move(state)) {}

    const EvolutionConfig& config() const noexcept { return config_; }
    const EvolutionState& state() const noexcept { return state_; }
    bool finished() const noexcept { return state_.generation >= config_.generations; }

    /// Evaluate, report and reproduce one generation.
    const GenerationRow& step() {
        const std::size_t g = state_.generation;
        const LifetimeSettings s = config_.lifetime();
        const Batch batch = selection_batch(config_, g);
        EvaluatedPopulation ev = evaluate_population(state_.population, batch, s, threads_, /*record_trace=*/true);
        const auto order = rank_by_fitness(ev.fitness);

        std::vector<Genotype> parents;
        std::vector<LearningTrace> parent_traces;
        parents.reserve(config_.parent_pool);
        parent_traces.reserve(config_.parent_pool);
        for (std::size_t k = 0; k < config_.parent_pool; ++k) {
            parents.push_back(state_.population[order[k]]);
            parent_traces.push_back(std::move(*ev.results[order[k]].trace));
        }
        GenerationRow row;
        row.generation = g;
        row.best_fitness = ev.fitness[order.front()];
        row.mean_fitness = std::accumulate(ev.fitness.begin(), ev.fitness.end(), 0.0) / static_cast<double>(ev.fitness.size());
        for (const auto& r : ev.results) row.diverged_instances += r.diverged_instances;
        ev.results.clear();

        const Genotype& champion = parents.front();
        row.focal = focal_report(champion, focal_batch(config_, g), s, threads_);
        row.focal.generation = g;
        row.champion_global_rl_rate = champion.global_rl_rate;
        const ActiveGraph ag = prune_graph(champion);
        row.champion_active_columns = ag.active_column_count();
        row.champion_active_activatory = ag.active_activatory_count();
        row.champion_active_modulatory = ag.active_modulatory_count();

        std::vector<const LearningTrace*> tp;
        for (const auto& t : parent_traces) tp.push_back(&t);
        std::vector<MutationLog> logs;
        auto next = next_generation(parents, tp, config_, g, threads_, &logs);
        for (const auto& l : logs) {
            row.guided_fits += l.guided_reports.size();
            for (const auto& r : l.guided_reports) row.guided_accepted += r.accepted;
        }

        state_.champion = champion;
        state_.population = std::move(next);
        state_.history.push_back(std::move(row));
        ++state_.generation;
        return state_.history.back();
    }

    /// Run until finished; `on_generation` fires after every step.
    void run(const std::function<void(const Evolution&)>& on_generation = {}) {
        while (!finished()) {
            step();
            if (on_generation) on_generation(*this);
        }
    }

private:
    EvolutionConfig config_;
    int threads_;
    EvolutionState state_;
};

} // namespace nmlab
