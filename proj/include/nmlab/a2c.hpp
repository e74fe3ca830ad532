#pragma once

/// @file a2c.hpp
/// @brief Advantage actor-critic over a Phenotype: Gaussian policy sampling,
/// discounted returns, loss gradients by reverse accumulation through the
/// active graph, global-norm clipping and RMSProp.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "phenotype.hpp"
#include "rng.hpp"
#include "task.hpp"

namespace nmlab {

struct A2CConfig {
    double learning_rate = 7e-4;
    double gamma = 0.99;
    double value_coef = 0.5;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
    double rms_alpha = 0.99;
    double rms_eps = 1e-5;
    int update_interval = kDefaultStepsPerTrial;
};

struct ActionSample {
    Vec2 raw{};
    double log_density = 0.0;
    double entropy = 0.0;
};

inline double gaussian_log_density(const Vec2& a, const Vec2& mean, const Vec2& sd) noexcept {
    double lp = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double z = (a[k] - mean[k]) / sd[k];
        lp += -0.5 * z * z - std::log(sd[k]) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return lp;
}

inline double gaussian_entropy(const Vec2& sd) noexcept {
    double h = 0.0;
    for (int k = 0; k < 2; ++k) h += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sd[k] * sd[k]);
    return h;
}

inline ActionSample sample_action(const Vec2& mean, const Vec2& sd, Stream& rng) noexcept {
    ActionSample s;
    for (int k = 0; k < 2; ++k) s.raw[k] = mean[k] + sd[k] * rng.normal();
    s.log_density = gaussian_log_density(s.raw, mean, sd);
    s.entropy = gaussian_entropy(sd);
    return s;
}

struct RolloutStep {
    std::array<double, kObservationSize> observation{};
    Vec2 raw_action{};
    double log_density = 0.0;
    double entropy = 0.0;
    double value = 0.0;
    double reward = 0.0;
};

struct RolloutBuffer {
    std::vector<RolloutStep> steps;
    bool terminal = false;

    void clear() {
        steps.clear();
        terminal = false;
    }
};

/// R_t = sum_{k >= t} gamma^(k-t) r_k; the buffer ends at a terminal step, so no bootstrap.
inline std::vector<double> compute_returns(const RolloutBuffer& buffer, double gamma) {
    std::vector<double> ret(buffer.steps.size());
    double acc = 0.0;
    for (std::size_t k = buffer.steps.size(); k-- > 0;) {
        acc = buffer.steps[k].reward + gamma * acc;
        ret[k] = acc;
    }
    return ret;
}

/// Per-projection gradients, parallel to Genotype::activatory. Inactive
/// projections keep all-zero matrices.
using Gradients = std::vector<Matrix>;

inline Gradients zero_gradients(const Phenotype& ph) {
    Gradients g;
    g.reserve(ph.weights().size());
    for (const auto& w : ph.weights()) g.emplace_back(w.rows, w.cols);
    return g;
}

/// A2C loss with the current weights. Advantages use the values stored in
/// the buffer and are constants.
inline double a2c_loss(Phenotype& ph, const RolloutBuffer& buffer, const std::vector<double>& returns,
                       const A2CConfig& cfg) {
    double loss = 0.0;
    for (std::size_t t = 0; t < buffer.steps.size(); ++t) {
        const auto& st = buffer.steps[t];
        const PolicyOutput out = ph.forward(st.observation);
        const double adv = returns[t] - st.value;
        const double resid = returns[t] - out.value;
        loss += -adv * gaussian_log_density(st.raw_action, out.mean, out.sd);
        loss += cfg.value_coef * resid * resid;
        loss -= cfg.entropy_coef * gaussian_entropy(out.sd);
    }
    return loss;
}

struct BackwardResult {
    Gradients grads;
    double loss = 0.0;
};

/// Gradient of a2c_loss with respect to every active activatory weight.
inline BackwardResult a2c_backward(Phenotype& ph, const RolloutBuffer& buffer, const std::vector<double>& returns,
                                   const A2CConfig& cfg) {
    BackwardResult res{zero_gradients(ph), 0.0};
    const Genotype& g = ph.genotype();
    const ActiveGraph& ag = ph.graph();
    std::array<std::vector<double>, kNumColumns> d_act;
    for (int c = 0; c < kNumColumns; ++c) d_act[static_cast<std::size_t>(c)].assign(column_size(c), 0.0);
    std::vector<double> d_pre;

    for (std::size_t t = 0; t < buffer.steps.size(); ++t) {
        const auto& st = buffer.steps[t];
        const PolicyOutput out = ph.forward(st.observation);
        const double adv = returns[t] - st.value;
        const double resid = returns[t] - out.value;
        res.loss += -adv * gaussian_log_density(st.raw_action, out.mean, out.sd) + cfg.value_coef * resid * resid -
                    cfg.entropy_coef * gaussian_entropy(out.sd);

        for (auto& v : d_act) std::fill(v.begin(), v.end(), 0.0);

        // Output gradients are taken directly with respect to pre-activations.
        std::array<double, kActionSize> d_action_pre{};
        const auto action_pre = ph.pre_activation(kActionColumn);
        for (int k = 0; k < 2; ++k) {
            const double var = out.sd[k] * out.sd[k];
            const double diff = st.raw_action[k] - out.mean[k];
            d_action_pre[static_cast<std::size_t>(k)] = -adv * diff / var;
            const double p = action_pre[static_cast<std::size_t>(k) + 2];
            if (p > kLogSdMin && p < kLogSdMax) {
                d_action_pre[static_cast<std::size_t>(k) + 2] = -adv * (diff * diff / var - 1.0) - cfg.entropy_coef;
            }
        }
        const double d_value_pre = -2.0 * cfg.value_coef * resid;

        for (auto it = ag.order.rbegin(); it != ag.order.rend(); ++it) {
            const int c = *it;
            if (c == kInputColumn) continue;
            const auto cu = static_cast<std::size_t>(c);
            d_pre.assign(column_size(c), 0.0);
            if (c == kActionColumn) {
                std::copy(d_action_pre.begin(), d_action_pre.end(), d_pre.begin());
            } else if (c == kValueColumn) {
                d_pre[0] = d_value_pre;
            } else {
                const auto a = ph.activation(c);
                for (std::size_t u = 0; u < d_pre.size(); ++u) d_pre[u] = d_act[cu][u] * (1.0 - a[u] * a[u]);
            }
            for (std::size_t k : ag.incoming[cu]) {
                const int pre = g.activatory[k].pre;
                outer_affine_acc(res.grads[k], d_pre, ph.activation(pre));
                if (pre != kInputColumn) affine_t_acc(ph.weights()[k], d_pre, d_act[static_cast<std::size_t>(pre)]);
            }
        }
    }
    if (!std::isfinite(res.loss)) throw DivergenceError("non-finite A2C loss");
    for (const auto& m : res.grads) {
        for (double v : m.data) {
            if (!std::isfinite(v)) throw DivergenceError("non-finite A2C gradient");
        }
    }
    return res;
}

struct OptimizerState {
    std::vector<Matrix> square_avg;

    void reset(const Phenotype& ph) {
        square_avg.clear();
        for (const auto& w : ph.weights()) square_avg.emplace_back(w.rows, w.cols);
    }
};

inline double global_norm(const Gradients& grads) noexcept {
    double s = 0.0;
    for (const auto& m : grads) {
        for (double v : m.data) s += v * v;
    }
    return std::sqrt(s);
}

/// Clip to max_grad_norm, take an RMSProp step scaled per projection by
/// global_rate * local_rl_rate, and return the L1 weight change.
inline double apply_rl_update(Phenotype& ph, Gradients grads, OptimizerState& opt, const A2CConfig& cfg,
                              double global_rate) {
    const double gn = global_norm(grads);
    if (gn > cfg.max_grad_norm && gn > 0.0) {
        const double scale = cfg.max_grad_norm / gn;
        for (auto& m : grads) {
            for (double& v : m.data) v *= scale;
        }
    }
    const Genotype& g = ph.genotype();
    double l1 = 0.0;
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!ph.graph().activatory[k]) continue;
        auto& sq = opt.square_avg[k].data;
        auto& w = ph.weights()[k].data;
        const auto& gk = grads[k].data;
        const double rate = cfg.learning_rate * global_rate * g.activatory[k].local_rl_rate;
        for (std::size_t i = 0; i < w.size(); ++i) {
            sq[i] = cfg.rms_alpha * sq[i] + (1.0 - cfg.rms_alpha) * gk[i] * gk[i];
            if (rate == 0.0) continue;
            const double before = w[i];
            w[i] = before - rate * gk[i] / (std::sqrt(sq[i]) + cfg.rms_eps);
            l1 += std::abs(w[i] - before);
        }
    }
    ph.rl_weight_change_l1 += l1;
    return l1;
}

} // namespace nmlab
