#pragma once

/// @file run.hpp
/// @brief Run orchestration behind the command-line tool: evolution with
/// checkpoints, resume, the pure-RL baseline and agent comparison. Every
/// function returns a process exit code.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "evolution.hpp"
#include "inspect.hpp"
#include "serialize.hpp"
#include "tables.hpp"

namespace nmlab {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitResumeMismatch = 3,
    kExitDivergence = 4,
};

namespace fs = std::filesystem;

/// Append-only record of a run: configuration identity and every artifact
/// written, one tab-separated `kind key value` line each.
class RunManifest {
public:
    explicit RunManifest(fs::path path) : path_(std::move(path)) {}

    void append(std::string_view kind, std::string_view key, std::string_view value) const {
        std::ofstream out(path_, std::ios::app);
        out << kind << '\t' << key << '\t' << value << '\n';
    }

private:
    fs::path path_;
};

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct RunPaths {
    fs::path dir;
    fs::path config() const { return dir / "config.ini"; }
    fs::path manifest() const { return dir / "manifest.tsv"; }
    fs::path checkpoint() const { return dir / "checkpoint.bin"; }
    fs::path generations() const { return dir / "generations.tsv"; }
    fs::path profiles() const { return dir / "focal_profiles.tsv"; }
    fs::path champion() const { return dir / "champion.genotype"; }
    fs::path trajectory() const { return dir / "champion_trajectory.tsv"; }
    fs::path champions_dir() const { return dir / "champions"; }
};

namespace detail {

inline std::string champion_name(std::size_t generation) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "gen_%05zu.genotype", generation);
    return buf;
}

/// Tables, champion and checkpoint for the current state. Tables are
/// regenerated from the full history, so resumed runs write identical files.
inline void write_run_artifacts(const RunConfig& cfg, const Evolution& evo, const RunPaths& paths,
                                const RunManifest& manifest, bool final) {
    const TableMeta meta{config_hash(cfg), cfg.evolution.master_seed};
    const auto& st = evo.state();
    write_table_file(paths.generations().string(), write_generation_table, st.history, meta);
    write_table_file(paths.profiles().string(), write_profile_table, st.history, meta);
    if (st.generation > 0) {
        save_genotype(paths.champion().string(), st.champion);
    }
    save_checkpoint(paths.checkpoint().string(), {config_hash(cfg), cfg.evolution.master_seed, st});
    manifest.append("checkpoint", "generation", std::to_string(st.generation));
    if (final && st.generation > 0) {
        const auto tr = trajectory_dump(st.champion, cfg.trajectory.seed, cfg.trajectory.instances,
                                        cfg.trajectory.trials, cfg.evolution.lifetime());
        write_table_file(paths.trajectory().string(), write_trajectory_table, tr, meta);
        manifest.append("artifact", "trajectory", paths.trajectory().string());
        manifest.append("artifact", "generations", paths.generations().string());
        manifest.append("artifact", "focal_profiles", paths.profiles().string());
        manifest.append("artifact", "final_champion", paths.champion().string());
        manifest.append("artifact", "champions", paths.champions_dir().string());
    }
}

inline void print_progress(std::ostream& log, const GenerationRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "gen %5zu  best %.4f  mean %.4f  focal %.4f  nm_only %.4f  rl_only %.4f  rl_l1 %.3g  nm_l1 %.3g  "
                  "G %.3g  cols %zu  mod %zu\n",
                  r.generation, r.best_fitness, r.mean_fitness, r.focal.regular, r.focal.nm_only, r.focal.rl_only,
                  r.focal.rl_weight_change_l1, r.focal.nm_weight_change_l1, r.champion_global_rl_rate,
                  r.champion_active_columns, r.champion_active_modulatory);
    log << buf << std::flush;
}

inline int drive(const RunConfig& cfg, Evolution& evo, const RunPaths& paths, std::ostream* log) {
    const RunManifest manifest(paths.manifest());
    const std::size_t interval = std::max<std::size_t>(1, cfg.evolution.checkpoint_interval);
    while (!evo.finished()) {
        const auto& row = evo.step();
        if (log) print_progress(*log, row);
        fs::create_directories(paths.champions_dir());
        save_genotype((paths.champions_dir() / champion_name(row.generation)).string(), evo.state().champion);
        if (evo.state().generation % interval == 0 && !evo.finished())
            write_run_artifacts(cfg, evo, paths, manifest, false);
    }
    write_run_artifacts(cfg, evo, paths, manifest, true);
    return kExitOk;
}

} // namespace detail

/// Start a fresh evolution run in `out_dir`.
inline int run_evolve(const RunConfig& cfg, const fs::path& out_dir, int threads, std::ostream* log = &std::cerr) {
    if (auto err = validate(cfg.evolution)) {
        std::cerr << "config error: " << *err << '\n';
        return kExitConfig;
    }
    RunPaths paths{out_dir};
    fs::create_directories(out_dir);
    {
        std::ofstream out(paths.config());
        out << dump_config(cfg);
    }
    const RunManifest manifest(paths.manifest());
    manifest.append("run", "version", kVersion);
    manifest.append("run", "command", "evolve");
    manifest.append("run", "config_hash", hex64(config_hash(cfg)));
    manifest.append("run", "master_seed", std::to_string(cfg.evolution.master_seed));
    manifest.append("run", "mode", to_string(cfg.evolution.mode));
    manifest.append("artifact", "config", paths.config().string());
    Evolution evo(cfg.evolution, threads);
    return detail::drive(cfg, evo, paths, log);
}

/// Continue the run stored in `out_dir`. When `requested` is given its hash
/// must match the stored configuration. `generations`, if set, extends or
/// shortens the target run length.
inline int run_resume(const fs::path& out_dir, const std::optional<RunConfig>& requested,
                      std::optional<std::size_t> generations, int threads, std::ostream* log = &std::cerr) {
    RunPaths paths{out_dir};
    RunConfig stored;
    try {
        stored = load_config(paths.config().string());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    Checkpoint ck;
    try {
        ck = load_checkpoint(paths.checkpoint().string());
    } catch (const CheckpointError& e) {
        std::cerr << "resume failed: " << e.what() << '\n';
        return kExitResumeMismatch;
    }
    const auto stored_hash = config_hash(stored);
    if (ck.config_hash != stored_hash || ck.master_seed != stored.evolution.master_seed) {
        std::cerr << "resume refused: checkpoint config hash " << hex64(ck.config_hash)
                  << " does not match stored config " << hex64(stored_hash) << '\n';
        return kExitResumeMismatch;
    }
    if (requested && config_hash(*requested) != stored_hash) {
        std::cerr << "resume refused: requested config hash " << hex64(config_hash(*requested))
                  << " differs from the run's " << hex64(stored_hash) << '\n';
        return kExitResumeMismatch;
    }
    if (ck.state.population.size() != stored.evolution.population_size) {
        std::cerr << "resume refused: checkpoint population size differs from config\n";
        return kExitResumeMismatch;
    }
    if (generations) {
        stored.evolution.generations = *generations;
        std::ofstream out(paths.config());
        out << dump_config(stored);
    }
    const RunManifest manifest(paths.manifest());
    manifest.append("run", "command", "resume");
    manifest.append("run", "resume_generation", std::to_string(ck.state.generation));
    Evolution evo(stored.evolution, std::move(ck.state), threads);
    return detail::drive(stored, evo, paths, log);
}

/// The non-evolved reference agent: initial architecture, fixed RL rate.
inline Genotype baseline_genotype(std::uint64_t seed, double global_rl_rate, double init_range = 0.5) {
    Stream rng = make_stream(seed, "baseline-init");
    Genotype g = initial_genotype(rng, init_range);
    g.global_rl_rate = global_rl_rate;
    return g;
}

inline LifetimeSettings curve_settings(const RunConfig& cfg, int trials, bool nm) {
    LifetimeSettings s = cfg.evolution.lifetime();
    s.n_trials = trials;
    s.nm_enabled = nm;
    s.rl_enabled = true;
    return s;
}

/// Pure-RL learning curve on fresh instances.
inline LearningCurve baseline_curve(const RunConfig& cfg, int threads) {
    const auto seed = cfg.evolution.master_seed;
    const Genotype g = baseline_genotype(seed, cfg.baseline.global_rl_rate, cfg.evolution.init_range);
    const Batch batch = make_batch(derive_key(seed, "baseline-batch"), cfg.baseline.instances);
    return learning_curve(g, batch, curve_settings(cfg, cfg.baseline.trials, false), threads);
}

inline int run_baseline(const RunConfig& cfg, const fs::path& out_dir, int threads, std::ostream* log = &std::cerr) {
    fs::create_directories(out_dir);
    const LearningCurve c = baseline_curve(cfg, threads);
    const TableMeta meta{config_hash(cfg), cfg.evolution.master_seed};
    const auto path = out_dir / "baseline_curve.tsv";
    write_table_file(path.string(), write_curve_table, std::vector<CurveSeries>{{"baseline_rl", c}}, meta);
    if (log) {
        *log << "baseline: trials " << c.mean.size() << ", last-100 mean "
             << window_mean(c.mean, c.mean.size() < 100 ? 0 : c.mean.size() - 100, c.mean.size()) << ", wrote "
             << path.string() << '\n';
    }
    if (c.diverged_instances > 0) {
        std::cerr << "baseline: " << c.diverged_instances << " instance(s) diverged\n";
        return kExitDivergence;
    }
    return kExitOk;
}

/// Learning curves of stored agents plus the baseline, all on one instance set.
inline int run_compare(const RunConfig& cfg, const std::vector<std::string>& genotype_paths, const fs::path& out_dir,
                       int threads, std::ostream* log = &std::cerr) {
    fs::create_directories(out_dir);
    const auto seed = cfg.evolution.master_seed;
    const Batch batch = make_batch(derive_key(seed, "compare-batch"), cfg.compare.instances);
    std::vector<CurveSeries> series;
    bool diverged = false;
    for (const auto& p : genotype_paths) {
        Genotype g;
        try {
            g = load_genotype(p);
        } catch (const std::exception& e) {
            std::cerr << "compare: skipping '" << p << "': " << e.what() << '\n';
            continue;
        }
        auto c = learning_curve(g, batch, curve_settings(cfg, cfg.compare.trials, true), threads);
        diverged = diverged || c.diverged_instances > 0;
        std::string label = fs::path(p).stem().string();
        for (const auto& s : series) {
            if (s.label == label) label += "_" + std::to_string(series.size());
        }
        if (log) *log << "compare: " << label << " trial-1 mean " << c.mean.front() << '\n';
        series.push_back({label, std::move(c)});
    }
    const Genotype base = baseline_genotype(seed, cfg.baseline.global_rl_rate, cfg.evolution.init_range);
    auto bc = learning_curve(base, batch, curve_settings(cfg, cfg.compare.baseline_trials, false), threads);
    diverged = diverged || bc.diverged_instances > 0;
    series.push_back({"baseline_rl", std::move(bc)});
    const auto path = out_dir / "compare_curves.tsv";
    write_table_file(path.string(), write_curve_table, series, TableMeta{config_hash(cfg), seed});
    if (log) *log << "compare: wrote " << path.string() << '\n';
    return diverged ? kExitDivergence : kExitOk;
}

} // namespace nmlab
