#pragma once

/// @file graph.hpp
/// @brief Computational-graph pruning: only columns and projections on an
/// input-to-output path take part in evaluation.

#include <array>
#include <vector>

#include "genotype.hpp"

namespace nmlab {

struct ActiveGraph {
    std::array<bool, kNumColumns> column{};
    std::vector<bool> activatory;  // parallel to Genotype::activatory
    std::vector<bool> modulatory;  // parallel to Genotype::modulatory
    /// Active columns in a topological order (input first when active).
    std::vector<int> order;
    /// For each column, indices of active incoming activatory projections.
    std::array<std::vector<std::size_t>, kNumColumns> incoming;

    std::size_t active_column_count() const noexcept {
        std::size_t n = 0;
        for (bool b : column) n += b;
        return n;
    }
    std::size_t active_activatory_count() const noexcept {
        std::size_t n = 0;
        for (bool b : activatory) n += b;
        return n;
    }
    std::size_t active_modulatory_count() const noexcept {
        std::size_t n = 0;
        for (bool b : modulatory) n += b;
        return n;
    }
};

inline ActiveGraph prune_graph(const Genotype& g) {
    ActiveGraph ag;
    std::array<bool, kNumColumns> from_input{};
    std::array<bool, kNumColumns> to_output{};

    from_input[kInputColumn] = true;
    // The graph has at most 7 nodes; relax until fixed point.
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& p : g.activatory) {
            const auto pre = static_cast<std::size_t>(p.pre), post = static_cast<std::size_t>(p.post);
            if (from_input[pre] && !from_input[post]) from_input[post] = changed = true;
            if (to_output[post] || is_output_column(p.post)) {
                if (!to_output[pre]) to_output[pre] = changed = true;
            }
        }
    }
    to_output[kActionColumn] = to_output[kValueColumn] = true;

    ag.activatory.resize(g.activatory.size());
    for (std::size_t k = 0; k < g.activatory.size(); ++k) {
        const auto& p = g.activatory[k];
        const bool on_path = from_input[static_cast<std::size_t>(p.pre)] && to_output[static_cast<std::size_t>(p.post)];
        ag.activatory[k] = on_path;
        if (on_path) {
            ag.column[static_cast<std::size_t>(p.pre)] = true;
            ag.column[static_cast<std::size_t>(p.post)] = true;
            ag.incoming[static_cast<std::size_t>(p.post)].push_back(k);
        }
    }

    ag.modulatory.resize(g.modulatory.size());
    for (std::size_t k = 0; k < g.modulatory.size(); ++k) {
        const auto& q = g.modulatory[k];
        const auto target = g.find_activatory(q.target_pre, q.target_post);
        ag.modulatory[k] = target && ag.activatory[*target] && ag.column[static_cast<std::size_t>(q.modulating)];
    }

    // Kahn's algorithm restricted to active projections; ties resolved by slot id.
    std::array<int, kNumColumns> indeg{};
    for (int c = 0; c < kNumColumns; ++c) indeg[static_cast<std::size_t>(c)] = static_cast<int>(ag.incoming[static_cast<std::size_t>(c)].size());
    std::array<bool, kNumColumns> done{};
    for (bool progress = true; progress;) {
        progress = false;
        for (int c = 0; c < kNumColumns; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            if (!ag.column[cu] || done[cu] || indeg[cu] != 0) continue;
            done[cu] = true;
            ag.order.push_back(c);
            progress = true;
            for (std::size_t k = 0; k < g.activatory.size(); ++k) {
                if (ag.activatory[k] && g.activatory[k].pre == c) --indeg[static_cast<std::size_t>(g.activatory[k].post)];
            }
        }
    }
    return ag;
}

} // namespace nmlab
