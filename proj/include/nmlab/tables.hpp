#pragma once

/// @file tables.hpp
/// @brief Tab-separated output tables. Each file starts with `#` comment
/// lines carrying the table name, config hash and master seed, followed by
/// a header row.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "evolution.hpp"

namespace nmlab {

struct TableMeta {
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
};

struct CurveSeries {
    std::string label;
    LearningCurve curve;
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void table_preamble(std::ostream& os, std::string_view name, const TableMeta& m) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.config_hash));
    os << "# nmlab " << name << '\n';
    os << "# config_hash=" << hash << '\n';
    os << "# master_seed=" << m.master_seed << '\n';
}

} // namespace detail

/// Per-generation metrics. Weight-change columns are summed |delta w| over a
/// lifetime, averaged over the focal instances.
inline void write_generation_table(std::ostream& os, const std::vector<GenerationRow>& rows, const TableMeta& m) {
    detail::table_preamble(os, "generations", m);
    os << "# rl_weight_change_l1, nm_weight_change_l1: summed L1 weight change per lifetime, mean over instances\n";
    os << "generation\tbest_fitness\tmean_fitness\tfocal_regular\tfocal_nm_only\tfocal_rl_only\t"
          "rl_weight_change_l1\tnm_weight_change_l1\tchampion_global_rl_rate\tactive_columns\t"
          "active_activatory\tactive_modulatory\tdiverged_instances\tguided_fits\tguided_accepted\n";
    for (const auto& r : rows) {
        os << r.generation << '\t' << detail::num(r.best_fitness) << '\t' << detail::num(r.mean_fitness) << '\t'
           << detail::num(r.focal.regular) << '\t' << detail::num(r.focal.nm_only) << '\t'
           << detail::num(r.focal.rl_only) << '\t' << detail::num(r.focal.rl_weight_change_l1) << '\t'
           << detail::num(r.focal.nm_weight_change_l1) << '\t' << detail::num(r.champion_global_rl_rate) << '\t'
           << r.champion_active_columns << '\t' << r.champion_active_activatory << '\t'
           << r.champion_active_modulatory << '\t' << r.diverged_instances << '\t' << r.guided_fits << '\t'
           << r.guided_accepted << '\n';
    }
}

/// Focal per-trial reward profile, one row per (generation, trial).
inline void write_profile_table(std::ostream& os, const std::vector<GenerationRow>& rows, const TableMeta& m) {
    detail::table_preamble(os, "focal-profiles", m);
    os << "generation\ttrial\tmean_reward\n";
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.focal.profile.size(); ++k)
            os << r.generation << '\t' << k + 1 << '\t' << detail::num(r.focal.profile[k]) << '\n';
    }
}

/// Learning curves, one row per (series, trial); min/max span the instances.
inline void write_curve_table(std::ostream& os, const std::vector<CurveSeries>& series, const TableMeta& m) {
    detail::table_preamble(os, "learning-curves", m);
    os << "series\ttrial\tmean_reward\tmin_reward\tmax_reward\n";
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.curve.mean.size(); ++k) {
            os << s.label << '\t' << k + 1 << '\t' << detail::num(s.curve.mean[k]) << '\t'
               << detail::num(s.curve.min[k]) << '\t' << detail::num(s.curve.max[k]) << '\n';
        }
    }
}

inline void write_trajectory_table(std::ostream& os, const TrajectoryTrace& tr, const TableMeta& m) {
    detail::table_preamble(os, "trajectories", m);
    os << "instance\tstep\tagent_x\tagent_y\tmean_x\tmean_y\tsd_x\tsd_y\ttarget_x\ttarget_y\n";
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
        const auto& s = tr.steps[k];
        os << k / tr.steps_per_instance << '\t' << k % tr.steps_per_instance << '\t' << detail::num(s.agent_pos[0])
           << '\t' << detail::num(s.agent_pos[1]) << '\t' << detail::num(s.action_mean[0]) << '\t'
           << detail::num(s.action_mean[1]) << '\t' << detail::num(s.action_sd[0]) << '\t'
           << detail::num(s.action_sd[1]) << '\t' << detail::num(s.target_pos[0]) << '\t'
           << detail::num(s.target_pos[1]) << '\n';
    }
}

template <typename Writer, typename... Args>
void write_table_file(const std::string& path, Writer&& writer, const Args&... args) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write table '" + path + "'");
    writer(out, args...);
}

} // namespace nmlab
