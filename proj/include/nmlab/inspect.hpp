#pragma once

/// @file inspect.hpp
/// @brief Textual architecture summary of a genotype.

#include <cstdio>
#include <sstream>
#include <string>

#include "genotype.hpp"
#include "graph.hpp"
#include "serialize.hpp"

namespace nmlab {

struct ArchitectureSummary {
    std::size_t active_columns = 0;
    std::size_t active_activatory = 0;
    std::size_t active_modulatory = 0;
    std::size_t total_activatory = 0;
    std::size_t total_modulatory = 0;
    bool rl_effective = false;  // some active weight can receive an RL update
    /// The value output is computed but nothing consumes it: RL is off and no
    /// modulatory projection reads it.
    bool value_vestigial = false;
};

inline ArchitectureSummary summarize(const Genotype& g) {
    const ActiveGraph ag = prune_graph(g);
    ArchitectureSummary s;
    s.active_columns = ag.active_column_count();
    s.active_activatory = ag.active_activatory_count();
    s.active_modulatory = ag.active_modulatory_count();
    s.total_activatory = g.activatory.size();
    s.total_modulatory = g.modulatory.size();
    if (g.global_rl_rate > 0.0) {
        for (std::size_t k = 0; k < g.activatory.size(); ++k) s.rl_effective = s.rl_effective || (ag.activatory[k] && g.activatory[k].local_rl_rate > 0.0);
    }
    bool value_read = false;
    for (std::size_t k = 0; k < g.modulatory.size(); ++k) value_read = value_read || (ag.modulatory[k] && g.modulatory[k].modulating == kValueColumn);
    s.value_vestigial = ag.column[kValueColumn] && !s.rl_effective && !value_read;
    return s;
}

inline std::string describe(const Genotype& g) {
    const ActiveGraph ag = prune_graph(g);
    const ArchitectureSummary s = summarize(g);
    std::ostringstream os;
    char buf[160];
    os << "columns (" << s.active_columns << " active)\n";
    for (const auto& c : g.columns) {
        std::snprintf(buf, sizeof buf, "  [%d] %-14s %-17s size %2zu  %s\n", c.id, std::string(to_string(c.role)).c_str(),
                      std::string(to_string(c.activation)).c_str(), c.size,
                      ag.column[static_cast<std::size_t>(c.id)] ? "active" : "dormant");
        os << buf;
    }
    os << "activatory projections (" << s.active_activatory << " active of " << s.total_activatory << ")\n";
    for (std::size_t k = 0; k < g.activatory.size(); ++k) {
        const auto& p = g.activatory[k];
        std::snprintf(buf, sizeof buf, "  %d -> %d  %zux%zu  local_rl_rate %.6g  %s\n", p.pre, p.post, p.weights.rows,
                      p.weights.cols, p.local_rl_rate, ag.activatory[k] ? "active" : "pruned");
        os << buf;
    }
    os << "modulatory projections (" << s.active_modulatory << " active of " << s.total_modulatory << ")\n";
    for (std::size_t k = 0; k < g.modulatory.size(); ++k) {
        const auto& q = g.modulatory[k];
        std::snprintf(buf, sizeof buf, "  column %d modulates %d -> %d  priority %.6g  %s\n", q.modulating, q.target_pre,
                      q.target_post, q.priority, ag.modulatory[k] ? "active" : "pruned");
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "global_rl_rate %.6g%s\n", g.global_rl_rate, s.rl_effective ? "" : " (RL inactive)");
    os << buf;
    if (s.value_vestigial) os << "value output column is vestigial: computed but unused by any learning mechanism\n";
    os << "evaluation order:";
    for (int c : ag.order) os << ' ' << c;
    os << '\n';
    return os.str();
}

} // namespace nmlab
