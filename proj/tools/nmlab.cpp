// Command-line front end: evolve, resume, baseline-rl, compare, inspect.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nmlab.hpp>

namespace {

struct CommonOptions {
    std::string config;
    std::string preset;
    std::string out = "run";
    int threads = 1;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "Config file (key = value, sectioned)")->envname("NMLAB_CONFIG");
    cmd->add_option("--preset", o.preset, "Base preset: paper-full or desk-scale")->envname("NMLAB_PRESET");
    cmd->add_option("--seed", o.seed, "Master seed (overrides config)")->envname("NMLAB_SEED");
    cmd->add_option("--mode", o.mode, "full, rl_only, nm_only or bottlenecked_nm")->envname("NMLAB_MODE");
    cmd->add_option("--set", o.overrides, "Override one option, section.key=value (repeatable)");
}

void add_run_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--out", o.out, "Output directory")->envname("NMLAB_OUT");
    cmd->add_option("--threads", o.threads, "Worker threads")->envname("NMLAB_THREADS")->check(CLI::PositiveNumber);
}

/// Preset, then config file, then --set, then --seed / --mode.
nmlab::RunConfig resolve_config(const CommonOptions& o) {
    nmlab::RunConfig cfg;
    if (!o.preset.empty()) {
        auto p = nmlab::preset(o.preset);
        if (!p) throw nmlab::ConfigError("unknown preset '" + o.preset + "'", "preset");
        cfg = *p;
    }
    if (!o.config.empty()) cfg = nmlab::load_config(o.config, cfg);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw nmlab::ConfigError("--set expects section.key=value, got '" + kv + "'");
        nmlab::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.evolution.master_seed = *o.seed;
    if (!o.mode.empty()) {
        const auto m = nmlab::parse_run_mode(o.mode);
        if (!m) throw nmlab::ConfigError("unknown mode '" + o.mode + "'", "mode");
        cfg.evolution.mode = *m;
    }
    if (auto err = nmlab::validate(cfg.evolution)) throw nmlab::ConfigError("invalid configuration: " + *err);
    return cfg;
}

bool any_config_given(const CommonOptions& o) {
    return !o.config.empty() || !o.preset.empty() || o.seed || !o.mode.empty() || !o.overrides.empty();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neuroevolution of reward-driven and neuromodulated learning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", nmlab::kVersion);

    CommonOptions evolve_opts;
    auto* evolve = app.add_subcommand("evolve", "Run the evolutionary loop");
    add_config_options(evolve, evolve_opts);
    add_run_options(evolve, evolve_opts);

    CommonOptions resume_opts;
    std::optional<std::size_t> resume_generations;
    auto* resume = app.add_subcommand("resume", "Continue a checkpointed run in --out");
    add_config_options(resume, resume_opts);
    add_run_options(resume, resume_opts);
    resume->add_option("--generations", resume_generations, "New total generation count");

    CommonOptions baseline_opts;
    std::optional<int> baseline_trials;
    std::optional<std::size_t> baseline_instances;
    auto* baseline = app.add_subcommand("baseline-rl", "Train the initial architecture with RL only");
    add_config_options(baseline, baseline_opts);
    add_run_options(baseline, baseline_opts);
    baseline->add_option("--trials", baseline_trials, "Trial budget");
    baseline->add_option("--instances", baseline_instances, "Instances averaged");

    CommonOptions compare_opts;
    std::vector<std::string> compare_paths;
    std::optional<int> compare_trials;
    std::optional<std::size_t> compare_instances;
    auto* compare = app.add_subcommand("compare", "Learning curves of stored genotypes and the RL baseline");
    add_config_options(compare, compare_opts);
    add_run_options(compare, compare_opts);
    compare->add_option("genotypes", compare_paths, "Genotype files")->required();
    compare->add_option("--trials", compare_trials, "Trials per agent");
    compare->add_option("--instances", compare_instances, "Shared instances");

    std::string inspect_path;
    std::string inspect_trajectory;
    std::uint64_t inspect_seed = 7;
    auto* inspect = app.add_subcommand("inspect", "Describe a stored genotype");
    inspect->add_option("genotype", inspect_path, "Genotype file")->required();
    inspect->add_option("--trajectory-out", inspect_trajectory, "Also write a first-trial trajectory table");
    inspect->add_option("--trajectory-seed", inspect_seed, "Seed of the fixed trajectory instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : nmlab::kExitConfig;
    }

    try {
        if (*evolve) {
            const auto cfg = resolve_config(evolve_opts);
            return nmlab::run_evolve(cfg, evolve_opts.out, evolve_opts.threads);
        }
        if (*resume) {
            std::optional<nmlab::RunConfig> requested;
            if (any_config_given(resume_opts)) requested = resolve_config(resume_opts);
            return nmlab::run_resume(resume_opts.out, requested, resume_generations, resume_opts.threads);
        }
        if (*baseline) {
            auto cfg = resolve_config(baseline_opts);
            if (baseline_trials) cfg.baseline.trials = *baseline_trials;
            if (baseline_instances) cfg.baseline.instances = *baseline_instances;
            return nmlab::run_baseline(cfg, baseline_opts.out, baseline_opts.threads);
        }
        if (*compare) {
            auto cfg = resolve_config(compare_opts);
            if (compare_trials) cfg.compare.trials = *compare_trials;
            if (compare_instances) cfg.compare.instances = *compare_instances;
            return nmlab::run_compare(cfg, compare_paths, compare_opts.out, compare_opts.threads);
        }
        if (*inspect) {
            nmlab::Genotype g;
            try {
                g = nmlab::load_genotype(inspect_path);
            } catch (const nmlab::ParseError& e) {
                std::cerr << inspect_path << ": parse error: " << e.what() << '\n';
                return nmlab::kExitFailure;
            }
            std::cout << nmlab::describe(g);
            if (!inspect_trajectory.empty()) {
                const nmlab::RunConfig cfg;
                const auto tr = nmlab::trajectory_dump(g, inspect_seed, cfg.trajectory.instances, cfg.trajectory.trials,
                                                       cfg.evolution.lifetime());
                nmlab::write_table_file(inspect_trajectory, nmlab::write_trajectory_table, tr,
                                        nmlab::TableMeta{nmlab::genotype_hash(g), inspect_seed});
                std::cout << "mean action sd " << nmlab::mean_action_sd(tr) << '\n';
            }
            return nmlab::kExitOk;
        }
    } catch (const nmlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return nmlab::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return nmlab::kExitFailure;
    }
    return nmlab::kExitOk;
}
