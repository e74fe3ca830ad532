#pragma once

/// @file config.hpp
/// @brief Run configuration: a flat, sectioned `key = value` text format,
/// named presets and a stable content hash.
///
///     # comment
///     [evolution]
///     population_size = 30
///     mode = full
///
/// Unknown sections or keys are errors.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evolution.hpp"
#include "rng.hpp"

namespace nmlab {

struct BaselineConfig {
    int trials = 5000;
    std::size_t instances = 10;
    double global_rl_rate = 1.0;
};

struct CompareConfig {
    int trials = 200;
    std::size_t instances = 10;
    int baseline_trials = 2000;
};

struct TrajectoryConfig {
    std::size_t instances = 8;
    int trials = 1;
    std::uint64_t seed = 7;
};

struct RunConfig {
    EvolutionConfig evolution{};
    BaselineConfig baseline{};
    CompareConfig compare{};
    TrajectoryConfig trajectory{};
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string key = {})
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view text, const std::string& key) {
    T v{};
    if constexpr (std::is_floating_point_v<T>) {
        std::string s(text);
        char* end = nullptr;
        v = static_cast<T>(std::strtod(s.c_str(), &end));
        if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("invalid number for '" + key + "': '" + s + "'", key);
    } else {
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw ConfigError("invalid integer for '" + key + "': '" + std::string(text) + "'", key);
    }
    return v;
}

inline bool parse_bool(std::string_view text, const std::string& key) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("invalid boolean for '" + key + "': '" + std::string(text) + "'", key);
}

struct Field {
    std::string name;  // section.key
    std::function<void(RunConfig&, std::string_view, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
    bool hashed = true;  // run-length and bookkeeping keys may change on resume
};

template <typename Member>
Field make_field(std::string name, Member accessor, bool hashed = true) {
    using T = std::remove_reference_t<decltype(accessor(std::declval<RunConfig&>()))>;
    Field f;
    f.name = std::move(name);
    f.hashed = hashed;
    f.set = [accessor](RunConfig& c, std::string_view v, const std::string& key) {
        if constexpr (std::is_same_v<T, bool>) {
            accessor(c) = parse_bool(v, key);
        } else {
            accessor(c) = parse_number<T>(v, key);
        }
    };
    f.get = [accessor](const RunConfig& c) {
        auto& m = accessor(const_cast<RunConfig&>(c));
        if constexpr (std::is_same_v<T, bool>) {
            return std::string(m ? "true" : "false");
        } else if constexpr (std::is_floating_point_v<T>) {
            return format_double(m);
        } else {
            return std::to_string(m);
        }
    };
    return f;
}

#define NMLAB_FIELD(name, expr, ...) make_field(name, [](RunConfig& c) -> auto& { return expr; } __VA_OPT__(, ) __VA_ARGS__)

inline const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> t;
        t.push_back(NMLAB_FIELD("evolution.population_size", c.evolution.population_size));
        t.push_back(NMLAB_FIELD("evolution.generations", c.evolution.generations, false));
        t.push_back(NMLAB_FIELD("evolution.parent_pool", c.evolution.parent_pool));
        t.push_back(NMLAB_FIELD("evolution.elite_pool", c.evolution.elite_pool));
        t.push_back(NMLAB_FIELD("evolution.n_instances", c.evolution.n_instances));
        t.push_back(NMLAB_FIELD("evolution.n_trials", c.evolution.n_trials));
        t.push_back(NMLAB_FIELD("evolution.steps_per_trial", c.evolution.steps_per_trial));
        t.push_back(NMLAB_FIELD("evolution.focal_instances", c.evolution.focal_instances));
        {
            Field f;
            f.name = "evolution.mode";
            f.set = [](RunConfig& c, std::string_view v, const std::string& key) {
                const auto m = parse_run_mode(v);
                if (!m) throw ConfigError("invalid mode for '" + key + "': '" + std::string(v) + "'", key);
                c.evolution.mode = *m;
            };
            f.get = [](const RunConfig& c) { return std::string(to_string(c.evolution.mode)); };
            t.push_back(std::move(f));
        }
        t.push_back(NMLAB_FIELD("evolution.master_seed", c.evolution.master_seed));
        t.push_back(NMLAB_FIELD("evolution.checkpoint_interval", c.evolution.checkpoint_interval, false));
        t.push_back(NMLAB_FIELD("evolution.init_range", c.evolution.init_range));

        t.push_back(NMLAB_FIELD("mutation.activatory_insert", c.evolution.mutation.activatory_insert));
        t.push_back(NMLAB_FIELD("mutation.activatory_delete", c.evolution.mutation.activatory_delete));
        t.push_back(NMLAB_FIELD("mutation.modulatory_insert", c.evolution.mutation.modulatory_insert));
        t.push_back(NMLAB_FIELD("mutation.modulatory_delete", c.evolution.mutation.modulatory_delete));
        t.push_back(NMLAB_FIELD("mutation.activatory_weights", c.evolution.mutation.activatory_weights));
        t.push_back(NMLAB_FIELD("mutation.modulatory_weights", c.evolution.mutation.modulatory_weights));
        t.push_back(NMLAB_FIELD("mutation.guided_activatory_fraction", c.evolution.mutation.guided_activatory_fraction));
        t.push_back(NMLAB_FIELD("mutation.guided_modulatory_fraction", c.evolution.mutation.guided_modulatory_fraction));
        t.push_back(NMLAB_FIELD("mutation.global_rate", c.evolution.mutation.global_rate));
        t.push_back(NMLAB_FIELD("mutation.global_noise_min", c.evolution.mutation.global_noise_min));
        t.push_back(NMLAB_FIELD("mutation.global_noise_max", c.evolution.mutation.global_noise_max));
        t.push_back(NMLAB_FIELD("mutation.local_rate", c.evolution.mutation.local_rate));
        t.push_back(NMLAB_FIELD("mutation.local_noise_min", c.evolution.mutation.local_noise_min));
        t.push_back(NMLAB_FIELD("mutation.local_noise_max", c.evolution.mutation.local_noise_max));
        t.push_back(NMLAB_FIELD("mutation.priority", c.evolution.mutation.priority));
        t.push_back(NMLAB_FIELD("mutation.priority_noise", c.evolution.mutation.priority_noise));
        t.push_back(NMLAB_FIELD("mutation.weight_noise_min", c.evolution.mutation.weight_noise_min));
        t.push_back(NMLAB_FIELD("mutation.weight_noise_max", c.evolution.mutation.weight_noise_max));
        t.push_back(NMLAB_FIELD("mutation.init_range", c.evolution.mutation.init_range));
        t.push_back(NMLAB_FIELD("mutation.structural_retries", c.evolution.mutation.structural_retries));
        t.push_back(NMLAB_FIELD("mutation.max_redraws", c.evolution.mutation.max_redraws));

        t.push_back(NMLAB_FIELD("guided.tau", c.evolution.guided.tau));
        t.push_back(NMLAB_FIELD("guided.tau_outside", c.evolution.guided.tau_outside));
        t.push_back(NMLAB_FIELD("guided.train_instances", c.evolution.guided.train_instances));
        t.push_back(NMLAB_FIELD("guided.validation_instances", c.evolution.guided.validation_instances));
        t.push_back(NMLAB_FIELD("guided.stall_patience", c.evolution.guided.stall_patience));
        t.push_back(NMLAB_FIELD("guided.max_epochs", c.evolution.guided.max_epochs));
        t.push_back(NMLAB_FIELD("guided.initial_step", c.evolution.guided.initial_step));
        t.push_back(NMLAB_FIELD("guided.step_growth", c.evolution.guided.step_growth));
        t.push_back(NMLAB_FIELD("guided.step_shrink", c.evolution.guided.step_shrink));
        t.push_back(NMLAB_FIELD("guided.min_relative_improvement", c.evolution.guided.min_relative_improvement));

        t.push_back(NMLAB_FIELD("a2c.learning_rate", c.evolution.a2c.learning_rate));
        t.push_back(NMLAB_FIELD("a2c.gamma", c.evolution.a2c.gamma));
        t.push_back(NMLAB_FIELD("a2c.value_coef", c.evolution.a2c.value_coef));
        t.push_back(NMLAB_FIELD("a2c.entropy_coef", c.evolution.a2c.entropy_coef));
        t.push_back(NMLAB_FIELD("a2c.max_grad_norm", c.evolution.a2c.max_grad_norm));
        t.push_back(NMLAB_FIELD("a2c.rms_alpha", c.evolution.a2c.rms_alpha));
        t.push_back(NMLAB_FIELD("a2c.rms_eps", c.evolution.a2c.rms_eps));
        t.push_back(NMLAB_FIELD("a2c.update_interval", c.evolution.a2c.update_interval));

        t.push_back(NMLAB_FIELD("baseline.trials", c.baseline.trials));
        t.push_back(NMLAB_FIELD("baseline.instances", c.baseline.instances));
        t.push_back(NMLAB_FIELD("baseline.global_rl_rate", c.baseline.global_rl_rate));

        t.push_back(NMLAB_FIELD("compare.trials", c.compare.trials));
        t.push_back(NMLAB_FIELD("compare.instances", c.compare.instances));
        t.push_back(NMLAB_FIELD("compare.baseline_trials", c.compare.baseline_trials));

        t.push_back(NMLAB_FIELD("trajectory.instances", c.trajectory.instances));
        t.push_back(NMLAB_FIELD("trajectory.trials", c.trajectory.trials));
        t.push_back(NMLAB_FIELD("trajectory.seed", c.trajectory.seed));
        return t;
    }();
    return table;
}

#undef NMLAB_FIELD

inline const Field* find_field(std::string_view name) {
    for (const auto& f : fields()) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

} // namespace detail

/// Set one option by its qualified name (`section.key`).
inline void set_option(RunConfig& c, std::string_view qualified, std::string_view value) {
    const std::string key(qualified);
    const auto* f = detail::find_field(qualified);
    if (!f) throw ConfigError("unknown config key '" + key + "'", key);
    f->set(c, detail::trim(value), key);
}

inline std::string get_option(const RunConfig& c, std::string_view qualified) {
    const auto* f = detail::find_field(qualified);
    if (!f) throw ConfigError("unknown config key '" + std::string(qualified) + "'", std::string(qualified));
    return f->get(c);
}

inline std::vector<std::string> option_names() {
    std::vector<std::string> out;
    for (const auto& f : detail::fields()) out.push_back(f.name);
    return out;
}

/// Apply `key = value` lines on top of `base`.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        auto line = raw;
        if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (const auto& f : detail::fields()) known = known || f.name.starts_with(section + ".");
            if (!known) throw ConfigError(where + "unknown config section '" + section + "'", section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key = std::string(detail::trim(line.substr(0, eq)));
        const std::string qualified = section.empty() ? key : section + "." + key;
        try {
            set_option(base, qualified, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what(), e.key());
        }
    }
    if (auto err = validate(base.evolution)) throw ConfigError("invalid configuration: " + *err);
    return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), std::move(base));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what(), e.key());
    }
}

/// Canonical text form; parse_config(dump_config(c)) == c.
inline std::string dump_config(const RunConfig& c) {
    std::ostringstream os;
    std::string section;
    for (const auto& f : detail::fields()) {
        const auto dot = f.name.find('.');
        const auto sec = f.name.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) os << '\n';
            os << '[' << sec << "]\n";
            section = sec;
        }
        os << f.name.substr(dot + 1) << " = " << f.get(c) << '\n';
    }
    return os.str();
}

/// Hash of every option that shapes results. Run length and checkpoint
/// cadence are excluded so a finished run can be extended by resuming.
inline std::uint64_t config_hash(const RunConfig& c) {
    std::string canon;
    for (const auto& f : detail::fields()) {
        if (f.hashed) canon += f.name + "=" + f.get(c) + "\n";
    }
    return detail::fnv1a(canon);
}

inline RunConfig preset_paper_full() {
    RunConfig c;
    auto& e = c.evolution;
    e.population_size = 100;
    e.generations = 1500;
    e.parent_pool = 25;
    e.elite_pool = 5;
    e.n_instances = 64;
    e.focal_instances = 64;
    e.n_trials = 50;
    e.guided.train_instances = 48;
    e.guided.validation_instances = 16;
    return c;
}

inline RunConfig preset_desk_scale() {
    RunConfig c;
    auto& e = c.evolution;
    e.population_size = 30;
    e.generations = 300;
    e.parent_pool = 8;
    e.elite_pool = 3;
    e.n_instances = 16;
    e.focal_instances = 16;
    e.n_trials = 30;
    e.guided.train_instances = 12;
    e.guided.validation_instances = 4;
    return c;
}

inline std::optional<RunConfig> preset(std::string_view name) {
    if (name == "paper-full") return preset_paper_full();
    if (name == "desk-scale") return preset_desk_scale();
    return std::nullopt;
}

} // namespace nmlab
