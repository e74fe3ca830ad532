#pragma once

/// @file phenotype.hpp
/// @brief Runtime network: mutable weights, activation cache, forward pass and
/// the neuromodulatory weight update.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "genotype.hpp"
#include "graph.hpp"
#include "task.hpp"

namespace nmlab {

/// Apply a column's activation function to a pre-activation vector.
inline void apply_activation(Activation kind, std::span<const double> pre, std::span<double> out) noexcept {
    switch (kind) {
    case Activation::tanh:
        for (std::size_t k = 0; k < pre.size(); ++k) out[k] = std::tanh(pre[k]);
        break;
    case Activation::identity:
        std::copy(pre.begin(), pre.end(), out.begin());
        break;
    case Activation::action_composite:
        // Means are linear; SD units are exp of the clamped pre-activation.
        out[0] = pre[0];
        out[1] = pre[1];
        out[2] = std::exp(std::clamp(pre[2], kLogSdMin, kLogSdMax));
        out[3] = std::exp(std::clamp(pre[3], kLogSdMin, kLogSdMax));
        break;
    }
}

/// d activation / d pre for each unit, given pre and the activation value.
inline double activation_grad(Activation kind, std::size_t unit, double pre, double act) noexcept {
    switch (kind) {
    case Activation::tanh:
        return 1.0 - act * act;
    case Activation::identity:
        return 1.0;
    case Activation::action_composite:
        if (unit < 2) return 1.0;
        return (pre > kLogSdMin && pre < kLogSdMax) ? act : 0.0;
    }
    return 0.0;
}

struct PolicyOutput {
    Vec2 mean{};
    Vec2 sd{};
    double value = 0.0;
};

/// Scratch space for one modulatory update.
struct NmScratch {
    std::vector<double> fm_hidden = std::vector<double>(kFmHidden);
    std::vector<double> fm_out;
    std::vector<double> fg_in;
    std::vector<double> fg_hidden = std::vector<double>(kFgHidden);
    std::array<double, 1> fg_out{};
};

/// (w_hat, beta) = f^m(a_m), eta = f^g(a_i, a_j), w += eta * beta (.) (w_hat - w).
/// Returns the L1 norm of the applied change.
inline double modulate(const ModulatoryProjection& q, std::span<const double> a_m, std::span<const double> a_i,
                       std::span<const double> a_j, Matrix& w, NmScratch& s) {
    const std::size_t n = w.size();
    s.fm_out.resize(2 * n);
    s.fg_in.resize(a_i.size() + a_j.size());
    std::copy(a_i.begin(), a_i.end(), s.fg_in.begin());
    std::copy(a_j.begin(), a_j.end(), s.fg_in.begin() + static_cast<std::ptrdiff_t>(a_i.size()));
    q.fg.forward(s.fg_in, s.fg_hidden, s.fg_out);
    const double eta = squash_unit(s.fg_out[0]);
    if (eta == 0.0) return 0.0;
    q.fm.forward(a_m, s.fm_hidden, s.fm_out);
    double l1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double beta = squash_unit(s.fm_out[n + k]);
        const double before = w.data[k];
        const double after = before + eta * beta * (s.fm_out[k] - before);
        w.data[k] = after;
        l1 += std::abs(after - before);
    }
    return l1;
}

class Phenotype {
public:
    explicit Phenotype(const Genotype& g) : genotype_(&g), graph_(prune_graph(g)) {
        weights_.reserve(g.activatory.size());
        for (const auto& p : g.activatory) weights_.push_back(p.weights);
        for (int c = 0; c < kNumColumns; ++c) {
            const auto n = column_size(c);
            pre_[static_cast<std::size_t>(c)].assign(n, 0.0);
            act_[static_cast<std::size_t>(c)].assign(n, 0.0);
        }
        for (std::size_t k = 0; k < g.modulatory.size(); ++k) {
            if (graph_.modulatory[k]) nm_order_.push_back(k);
        }
        std::stable_sort(nm_order_.begin(), nm_order_.end(), [&](std::size_t a, std::size_t b) {
            return g.modulatory[a].priority < g.modulatory[b].priority;
        });
        reset_activations();
    }

    const Genotype& genotype() const noexcept { return *genotype_; }
    const ActiveGraph& graph() const noexcept { return graph_; }

    std::vector<Matrix>& weights() noexcept { return weights_; }
    const std::vector<Matrix>& weights() const noexcept { return weights_; }

    std::span<const double> activation(int c) const noexcept { return act_[static_cast<std::size_t>(c)]; }
    std::span<double> activation_mut(int c) noexcept { return act_[static_cast<std::size_t>(c)]; }
    std::span<const double> pre_activation(int c) const noexcept { return pre_[static_cast<std::size_t>(c)]; }

    /// Restore innate weights and clear accumulators.
    void reset() {
        for (std::size_t k = 0; k < weights_.size(); ++k) weights_[k] = genotype_->activatory[k].weights;
        rl_weight_change_l1 = nm_weight_change_l1 = 0.0;
        reset_activations();
    }

    bool has_active_modulation() const noexcept { return !nm_order_.empty(); }

    PolicyOutput forward(std::span<const double> input) {
        const auto& cols = genotype_->columns;
        std::copy(input.begin(), input.end(), act_[kInputColumn].begin());
        std::copy(input.begin(), input.end(), pre_[kInputColumn].begin());
        for (int c : graph_.order) {
            if (c == kInputColumn) continue;
            auto& pre = pre_[static_cast<std::size_t>(c)];
            std::fill(pre.begin(), pre.end(), 0.0);
            for (std::size_t k : graph_.incoming[static_cast<std::size_t>(c)]) {
                affine_acc(weights_[k], act_[static_cast<std::size_t>(genotype_->activatory[k].pre)], pre);
            }
            apply_activation(cols[static_cast<std::size_t>(c)].activation, pre, act_[static_cast<std::size_t>(c)]);
        }
        PolicyOutput out;
        const auto& a = act_[kActionColumn];
        out.mean = {a[0], a[1]};
        out.sd = {a[2], a[3]};
        out.value = act_[kValueColumn][0];
        if (!std::isfinite(out.mean[0]) || !std::isfinite(out.mean[1]) || !std::isfinite(out.value) ||
            !std::isfinite(out.sd[0]) || !std::isfinite(out.sd[1])) {
            throw DivergenceError("non-finite network output");
        }
        return out;
    }

    /// One neuromodulatory pass over all active modulatory projections, using
    /// the activations from the latest forward(). Returns the L1 change.
    double nm_step() {
        double total = 0.0;
        for (std::size_t k : nm_order_) {
            const auto& q = genotype_->modulatory[k];
            const auto target = *genotype_->find_activatory(q.target_pre, q.target_post);
            total += modulate(q, act_[static_cast<std::size_t>(q.modulating)],
                              act_[static_cast<std::size_t>(q.target_pre)],
                              act_[static_cast<std::size_t>(q.target_post)], weights_[target], nm_scratch_);
        }
        nm_weight_change_l1 += total;
        return total;
    }

    double rl_weight_change_l1 = 0.0;
    double nm_weight_change_l1 = 0.0;

private:
    void reset_activations() {
        for (auto& v : act_) std::fill(v.begin(), v.end(), 0.0);
        for (auto& v : pre_) std::fill(v.begin(), v.end(), 0.0);
        // Inactive action column still reports exp(0) = 1 standard deviations.
        apply_activation(Activation::action_composite, pre_[kActionColumn], act_[kActionColumn]);
    }

    const Genotype* genotype_;
    ActiveGraph graph_;
    std::vector<Matrix> weights_;
    std::array<std::vector<double>, kNumColumns> pre_;
    std::array<std::vector<double>, kNumColumns> act_;
    std::vector<std::size_t> nm_order_;
    NmScratch nm_scratch_;
};

} // namespace nmlab
