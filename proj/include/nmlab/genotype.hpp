#pragma once

/// @file genotype.hpp
/// @brief Heritable network description: column slots, activatory and
/// modulatory projections, RL learning rates.
///
/// Slot layout is fixed: 0 = input (6), 1..4 = hidden (8, tanh),
/// 5 = action output (2 means + 2 log-SD units), 6 = value output (1).
/// A slot is part of the network only while it lies on an input-to-output
/// path; see graph.hpp.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "matrix.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace nmlab {

enum class ColumnRole { input, hidden, action_output, value_output };
enum class Activation { tanh, identity, action_composite };

inline constexpr int kNumColumns = 7;
inline constexpr int kInputColumn = 0;
inline constexpr int kFirstHidden = 1;
inline constexpr int kLastHidden = 4;
inline constexpr int kActionColumn = 5;
inline constexpr int kValueColumn = 6;
inline constexpr std::size_t kHiddenSize = 8;
inline constexpr std::size_t kActionSize = 4;

/// Pre-exponential clamp for action standard deviations.
inline constexpr double kLogSdMin = -10.0;
inline constexpr double kLogSdMax = 4.0;

struct ColumnSpec {
    int id = 0;
    std::size_t size = 0;
    Activation activation = Activation::identity;
    ColumnRole role = ColumnRole::hidden;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

using ColumnLayout = std::array<ColumnSpec, kNumColumns>;

inline const ColumnLayout& standard_columns() {
    static const ColumnLayout layout = [] {
        ColumnLayout l{};
        l[kInputColumn] = {kInputColumn, 6, Activation::identity, ColumnRole::input};
        for (int h = kFirstHidden; h <= kLastHidden; ++h) l[h] = {h, kHiddenSize, Activation::tanh, ColumnRole::hidden};
        l[kActionColumn] = {kActionColumn, kActionSize, Activation::action_composite, ColumnRole::action_output};
        l[kValueColumn] = {kValueColumn, 1, Activation::identity, ColumnRole::value_output};
        return l;
    }();
    return layout;
}

inline std::size_t column_size(int id) { return standard_columns().at(static_cast<std::size_t>(id)).size; }

/// Entries in the affine weight matrix of a pre -> post projection.
inline std::size_t projection_weight_count(int pre, int post) { return column_size(post) * (column_size(pre) + 1); }

inline bool is_output_column(int id) noexcept { return id == kActionColumn || id == kValueColumn; }
inline bool is_hidden_column(int id) noexcept { return id >= kFirstHidden && id <= kLastHidden; }

/// Columns allowed as the source of an activatory projection.
inline bool valid_pre_column(int id) noexcept { return id == kInputColumn || is_hidden_column(id); }
/// Columns allowed as the destination of an activatory projection.
inline bool valid_post_column(int id) noexcept { return is_hidden_column(id) || is_output_column(id); }

/// Modulating-column eligibility. Normal runs: input and hidden columns.
/// Bottlenecked runs: the value output column only.
inline bool eligible_modulator(int id, bool bottlenecked) noexcept {
    if (bottlenecked) return id == kValueColumn;
    return id == kInputColumn || is_hidden_column(id);
}

struct ActivatoryProjection {
    int pre = 0;
    int post = 0;
    Matrix weights;  // size(post) x (size(pre) + 1); the last column is the bias
    double local_rl_rate = 1.0;

    friend bool operator==(const ActivatoryProjection&, const ActivatoryProjection&) = default;
};

/// Hidden widths of the two internal MLPs.
inline constexpr std::size_t kFmHidden = 2 * kHiddenSize;
inline constexpr std::size_t kFgHidden = kHiddenSize;

struct ModulatoryProjection {
    int modulating = 0;
    int target_pre = 0;
    int target_post = 0;
    Mlp fm;  // size(m) -> 16 -> 2*|w|   (target weights, then update-rate mask)
    Mlp fg;  // size(i)+size(j) -> 8 -> 1 (projection-level update rate)
    double priority = 0.0;

    std::size_t target_weight_count() const noexcept { return fm.output_size() / 2; }

    static ModulatoryProjection random(int modulating, int pre, int post, double range, Stream& rng) {
        ModulatoryProjection q;
        q.modulating = modulating;
        q.target_pre = pre;
        q.target_post = post;
        const std::size_t n = projection_weight_count(pre, post);
        q.fm = Mlp::random(column_size(modulating), kFmHidden, 2 * n, range, rng);
        q.fg = Mlp::random(column_size(pre) + column_size(post), kFgHidden, 1, range, rng);
        return q;
    }

    friend bool operator==(const ModulatoryProjection&, const ModulatoryProjection&) = default;
};

struct Genotype {
    ColumnLayout columns = standard_columns();
    std::vector<ActivatoryProjection> activatory;
    std::vector<ModulatoryProjection> modulatory;
    double global_rl_rate = 0.0;

    /// Index of the activatory projection pre -> post, if present.
    std::optional<std::size_t> find_activatory(int pre, int post) const noexcept {
        for (std::size_t k = 0; k < activatory.size(); ++k) {
            if (activatory[k].pre == pre && activatory[k].post == post) return k;
        }
        return std::nullopt;
    }

    friend bool operator==(const Genotype&, const Genotype&) = default;
};

/// True when adding pre -> post would close a directed cycle.
inline bool creates_cycle(const Genotype& g, int pre, int post) {
    if (pre == post) return true;
    // Cycle iff pre is reachable from post.
    std::array<bool, kNumColumns> seen{};
    std::vector<int> stack{post};
    while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        if (c == pre) return true;
        if (seen[static_cast<std::size_t>(c)]) continue;
        seen[static_cast<std::size_t>(c)] = true;
        for (const auto& p : g.activatory) {
            if (p.pre == c) stack.push_back(p.post);
        }
    }
    return false;
}

/// Check every structural invariant. Returns a description of the first
/// violation, or nullopt.
inline std::optional<std::string> validate(const Genotype& g, bool bottlenecked = false) {
    if (g.columns != standard_columns()) return "column layout differs from the fixed seven-slot layout";
    if (!(g.global_rl_rate >= 0.0)) return "global_rl_rate must be non-negative";
    for (std::size_t k = 0; k < g.activatory.size(); ++k) {
        const auto& p = g.activatory[k];
        if (!valid_pre_column(p.pre) || !valid_post_column(p.post) || p.pre == p.post)
            return "activatory projection " + std::to_string(k) + " has invalid endpoints";
        if (p.weights.rows != column_size(p.post) || p.weights.cols != column_size(p.pre) + 1)
            return "activatory projection " + std::to_string(k) + " has wrong weight shape";
        if (!(p.local_rl_rate >= 0.0)) return "activatory projection " + std::to_string(k) + " has negative RL rate";
        for (std::size_t q = 0; q < k; ++q) {
            if (g.activatory[q].pre == p.pre && g.activatory[q].post == p.post)
                return "duplicate activatory projection " + std::to_string(p.pre) + "->" + std::to_string(p.post);
        }
    }
    // Acyclicity by Kahn's algorithm.
    {
        std::array<int, kNumColumns> indeg{};
        for (const auto& p : g.activatory) ++indeg[static_cast<std::size_t>(p.post)];
        std::vector<int> ready;
        for (int c = 0; c < kNumColumns; ++c)
            if (indeg[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
        int visited = 0;
        while (!ready.empty()) {
            const int c = ready.back();
            ready.pop_back();
            ++visited;
            for (const auto& p : g.activatory) {
                if (p.pre == c && --indeg[static_cast<std::size_t>(p.post)] == 0) ready.push_back(p.post);
            }
        }
        if (visited != kNumColumns) return "activatory graph contains a cycle";
    }
    for (std::size_t k = 0; k < g.modulatory.size(); ++k) {
        const auto& q = g.modulatory[k];
        const std::string tag = "modulatory projection " + std::to_string(k);
        if (q.modulating < 0 || q.modulating >= kNumColumns || !eligible_modulator(q.modulating, bottlenecked))
            return tag + " has an ineligible modulating column";
        if (!g.find_activatory(q.target_pre, q.target_post)) return tag + " targets a missing activatory projection";
        const std::size_t n = projection_weight_count(q.target_pre, q.target_post);
        if (q.fm.input_size() != column_size(q.modulating) || q.fm.output_size() != 2 * n ||
            q.fm.hidden_size() != kFmHidden || q.fm.b1.size() != kFmHidden || q.fm.b2.size() != 2 * n)
            return tag + " has a malformed target-weight MLP";
        if (q.fg.input_size() != column_size(q.target_pre) + column_size(q.target_post) ||
            q.fg.output_size() != 1 || q.fg.hidden_size() != kFgHidden || q.fg.b1.size() != kFgHidden ||
            q.fg.b2.size() != 1)
            return tag + " has a malformed gate MLP";
    }
    return std::nullopt;
}

/// Two-branch starting architecture: input -> hidden1 -> action, input -> hidden2 -> value.
/// Weights uniform in [-range, range], local RL rates 1, global RL rate 0.
inline Genotype initial_genotype(Stream& rng, double range = 0.5) {
    Genotype g;
    auto add = [&](int pre, int post) {
        ActivatoryProjection p;
        p.pre = pre;
        p.post = post;
        p.weights = random_uniform_matrix(column_size(post), column_size(pre) + 1, -range, range, rng);
        g.activatory.push_back(std::move(p));
    };
    add(kInputColumn, kFirstHidden);
    add(kFirstHidden, kActionColumn);
    add(kInputColumn, kFirstHidden + 1);
    add(kFirstHidden + 1, kValueColumn);
    return g;
}

/// Remove modulatory projections whose target projection no longer exists.
inline void drop_orphaned_modulation(Genotype& g) {
    std::erase_if(g.modulatory, [&](const ModulatoryProjection& q) {
        return !g.find_activatory(q.target_pre, q.target_post).has_value();
    });
}

} // namespace nmlab
