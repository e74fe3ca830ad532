#pragma once

/// @file guided.hpp
/// @brief Guided mutation operators driven by a parent's learning trace.
///
/// Activatory: pull innate weights toward the across-instance mean of the
/// parent's final learned weights.
///
/// Modulatory: fit the two MLPs of a modulatory projection so that an
/// open-loop replay of the neuromodulatory rule over the parent's recorded
/// activations reproduces the function of the parent's final weights:
///
///   l = sum_h s(r_h) * sum_t ( || z_j(w~_th [a_i;1]) - z_j(w_Th [a_i;1]) || + tau * eta_th )
///
/// with s(r) the min-max normalised last-five-trial reward. The loss is
/// minimised with signSGD using exact reverse-mode gradients through the
/// replay; optimisation stops once the held-out validation loss stalls.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "genotype.hpp"
#include "lifetime.hpp"
#include "mlp.hpp"
#include "phenotype.hpp"
#include "rng.hpp"

namespace nmlab {

// -- activatory --------------------------------------------------------------

/// Mean of the final weights of projection `k` over non-diverged instances.
inline std::optional<Matrix> mean_final_weights(const LearningTrace& trace, std::size_t k) {
    std::optional<Matrix> mean;
    std::size_t count = 0;
    for (const auto& inst : trace.instances) {
        if (inst.diverged || k >= inst.final_weights.size()) continue;
        const Matrix& w = inst.final_weights[k];
        if (!mean) mean = Matrix(w.rows, w.cols);
        if (mean->rows != w.rows || mean->cols != w.cols) return std::nullopt;
        for (std::size_t i = 0; i < w.size(); ++i) mean->data[i] += w.data[i];
        ++count;
    }
    if (!mean || count == 0) return std::nullopt;
    for (double& v : mean->data) v /= static_cast<double>(count);
    return mean;
}

/// w' = w + u (target - w).
inline Matrix guided_activatory(const Matrix& w, const Matrix& target_mean, double u) {
    Matrix out = w;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = w.data[i] + u * (target_mean.data[i] - w.data[i]);
    return out;
}

// -- modulatory: replay problem ----------------------------------------------

struct GuidedSettings {
    double tau = 1e-5;
    /// Place the update cost outside the reward weighting: + tau * sum_{t,h} eta.
    bool tau_outside = false;
    std::size_t train_instances = 48;
    std::size_t validation_instances = 16;
    int stall_patience = 10;
    int max_epochs = 500;
    double initial_step = 0.01;
    double step_growth = 1.1;
    double step_shrink = 0.5;
    /// Validation must fall below best * (1 - this) to reset the stall counter.
    double min_relative_improvement = 1e-4;
};

/// One recorded instance, in double precision, time-major.
struct ReplayInstance {
    std::size_t steps = 0;
    std::vector<double> a_m;         // steps * size_m
    std::vector<double> a_i;         // steps * size_i
    std::vector<double> a_j;         // steps * size_j
    Matrix final_weights;            // w_T for this instance
    std::vector<double> target_out;  // z_j(w_T [a_i;1]) per step, steps * size_j
    double weight = 1.0;             // s(r_h)
};

struct ReplayProblem {
    std::size_t size_m = 0;
    std::size_t size_i = 0;
    std::size_t size_j = 0;
    Activation post_activation = Activation::identity;
    Matrix innate_weights;
    std::vector<ReplayInstance> instances;
    double tau = 1e-5;
    bool tau_outside = false;

    std::size_t weight_count() const noexcept { return innate_weights.size(); }

    /// Fill target_out from final_weights. Call after setting the activations.
    void precompute_targets() {
        std::vector<double> pre(size_j);
        for (auto& inst : instances) {
            inst.target_out.assign(inst.steps * size_j, 0.0);
            for (std::size_t t = 0; t < inst.steps; ++t) {
                std::fill(pre.begin(), pre.end(), 0.0);
                affine_acc(inst.final_weights, {inst.a_i.data() + t * size_i, size_i}, pre);
                apply_activation(post_activation, pre, {inst.target_out.data() + t * size_j, size_j});
            }
        }
    }
};

/// s(r_h) = (r_h - min r) / (max r - min r); all ones if max == min.
inline std::vector<double> reward_weights(std::span<const double> rewards) {
    std::vector<double> s(rewards.size(), 1.0);
    if (rewards.empty()) return s;
    const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
    if (*hi == *lo) return s;
    for (std::size_t k = 0; k < rewards.size(); ++k) s[k] = (rewards[k] - *lo) / (*hi - *lo);
    return s;
}

/// Build the replay problem for modulating column m and target projection k
/// of `parent` from its trace. Diverged instances are dropped. Returns nullopt
/// when the trace lacks any of the required columns.
inline std::optional<ReplayProblem> make_replay_problem(const Genotype& parent, const LearningTrace& trace, int m,
                                                        std::size_t k, const GuidedSettings& gs) {
    const auto& proj = parent.activatory.at(k);
    ReplayProblem p;
    p.size_m = column_size(m);
    p.size_i = column_size(proj.pre);
    p.size_j = column_size(proj.post);
    p.post_activation = parent.columns[static_cast<std::size_t>(proj.post)].activation;
    p.innate_weights = proj.weights;
    p.tau = gs.tau;
    p.tau_outside = gs.tau_outside;

    std::vector<double> rewards;
    for (const auto& inst : trace.instances) {
        if (inst.diverged) continue;
        if (!inst.has_column(m) || !inst.has_column(proj.pre) || !inst.has_column(proj.post)) return std::nullopt;
        if (k >= inst.final_weights.size()) return std::nullopt;
        ReplayInstance ri;
        ri.steps = inst.steps;
        auto widen = [](const std::vector<float>& src) { return std::vector<double>(src.begin(), src.end()); };
        ri.a_m = widen(inst.activations[static_cast<std::size_t>(m)]);
        ri.a_i = widen(inst.activations[static_cast<std::size_t>(proj.pre)]);
        ri.a_j = widen(inst.activations[static_cast<std::size_t>(proj.post)]);
        ri.final_weights = inst.final_weights[k];
        p.instances.push_back(std::move(ri));
        rewards.push_back(inst.last5_reward);
    }
    if (p.instances.empty()) return std::nullopt;
    const auto s = reward_weights(rewards);
    for (std::size_t h = 0; h < p.instances.size(); ++h) p.instances[h].weight = s[h];
    p.precompute_targets();
    return p;
}

/// Parameters being fitted: the two MLPs of a modulatory projection.
struct ModulatorParams {
    Mlp fm;
    Mlp fg;
};

struct ModulatorGrad {
    MlpGrad fm;
    MlpGrad fg;
    explicit ModulatorGrad(const ModulatorParams& p) : fm(p.fm), fg(p.fg) {}
    void zero() {
        fm.zero();
        fg.zero();
    }
};

namespace detail {

struct ReplayWorkspace {
    std::vector<double> w, fg_in, fg_hidden, fm_hidden, fm_out, pre_y, y, fg_out;
    // Per-step caches for the reverse pass.
    std::vector<double> w_prev, fm_hidden_t, fm_out_t, fg_hidden_t, q_raw_t, eta_t, pre_y_t, y_t, err_norm_t;
    std::vector<double> carry, d_out, d_pre, fg_d;
};

/// Replay one instance; accumulate loss and (when grad != nullptr) gradients.
inline double replay_instance(const ReplayProblem& p, const ReplayInstance& inst, const ModulatorParams& q,
                              ModulatorGrad* grad, ReplayWorkspace& ws) {
    const std::size_t n = p.weight_count();
    const std::size_t T = inst.steps;
    const std::size_t si = p.size_i, sj = p.size_j, sm = p.size_m;
    const bool keep = grad != nullptr;
    ws.w = p.innate_weights.data;
    ws.fg_in.resize(si + sj);
    ws.fg_hidden.resize(q.fg.hidden_size());
    ws.fm_hidden.resize(q.fm.hidden_size());
    ws.fm_out.resize(2 * n);
    ws.fg_out.resize(1);
    ws.pre_y.resize(sj);
    ws.y.resize(sj);
    if (keep) {
        ws.w_prev.resize(T * n);
        ws.fm_hidden_t.resize(T * ws.fm_hidden.size());
        ws.fm_out_t.resize(T * 2 * n);
        ws.fg_hidden_t.resize(T * ws.fg_hidden.size());
        ws.q_raw_t.resize(T);
        ws.eta_t.resize(T);
        ws.pre_y_t.resize(T * sj);
        ws.y_t.resize(T * sj);
        ws.err_norm_t.resize(T);
    }
    const double s = inst.weight;
    const double tau_weight = p.tau_outside ? 1.0 : s;
    Matrix wm(p.innate_weights.rows, p.innate_weights.cols);
    double loss = 0.0;

    for (std::size_t t = 0; t < T; ++t) {
        const double* ai = inst.a_i.data() + t * si;
        const double* aj = inst.a_j.data() + t * sj;
        const double* am = inst.a_m.data() + t * sm;
        std::copy(ai, ai + si, ws.fg_in.begin());
        std::copy(aj, aj + sj, ws.fg_in.begin() + static_cast<std::ptrdiff_t>(si));
        q.fg.forward(ws.fg_in, ws.fg_hidden, ws.fg_out);
        const double eta = squash_unit(ws.fg_out[0]);
        q.fm.forward({am, sm}, ws.fm_hidden, ws.fm_out);
        if (keep) {
            std::copy(ws.w.begin(), ws.w.end(), ws.w_prev.begin() + static_cast<std::ptrdiff_t>(t * n));
            std::copy(ws.fm_hidden.begin(), ws.fm_hidden.end(), ws.fm_hidden_t.begin() + static_cast<std::ptrdiff_t>(t * ws.fm_hidden.size()));
            std::copy(ws.fm_out.begin(), ws.fm_out.end(), ws.fm_out_t.begin() + static_cast<std::ptrdiff_t>(t * 2 * n));
            std::copy(ws.fg_hidden.begin(), ws.fg_hidden.end(), ws.fg_hidden_t.begin() + static_cast<std::ptrdiff_t>(t * ws.fg_hidden.size()));
            ws.q_raw_t[t] = ws.fg_out[0];
            ws.eta_t[t] = eta;
        }
        if (eta != 0.0) {
            for (std::size_t k = 0; k < n; ++k) {
                const double beta = squash_unit(ws.fm_out[n + k]);
                ws.w[k] += eta * beta * (ws.fm_out[k] - ws.w[k]);
            }
        }
        std::copy(ws.w.begin(), ws.w.end(), wm.data.begin());
        std::fill(ws.pre_y.begin(), ws.pre_y.end(), 0.0);
        affine_acc(wm, {ai, si}, ws.pre_y);
        apply_activation(p.post_activation, ws.pre_y, ws.y);
        const double* target = inst.target_out.data() + t * sj;
        double e2 = 0.0;
        for (std::size_t u = 0; u < sj; ++u) {
            const double e = ws.y[u] - target[u];
            e2 += e * e;
        }
        const double en = std::sqrt(e2);
        loss += s * en + tau_weight * p.tau * eta;
        if (keep) {
            std::copy(ws.pre_y.begin(), ws.pre_y.end(), ws.pre_y_t.begin() + static_cast<std::ptrdiff_t>(t * sj));
            std::copy(ws.y.begin(), ws.y.end(), ws.y_t.begin() + static_cast<std::ptrdiff_t>(t * sj));
            ws.err_norm_t[t] = en;
        }
    }
    if (!keep) return loss;

    ws.carry.assign(n, 0.0);
    ws.d_out.resize(2 * n);
    ws.d_pre.resize(sj);
    ws.fg_d.resize(1);
    const std::size_t cols = si + 1;
    for (std::size_t t = T; t-- > 0;) {
        const double* ai = inst.a_i.data() + t * si;
        const double* aj = inst.a_j.data() + t * sj;
        const double* am = inst.a_m.data() + t * sm;
        const double* target = inst.target_out.data() + t * sj;
        const double* pre_y = ws.pre_y_t.data() + t * sj;
        const double* y = ws.y_t.data() + t * sj;
        const double en = ws.err_norm_t[t];
        // Direct term: d(s ||y - y*||)/dw^t.
        if (en > 0.0) {
            for (std::size_t u = 0; u < sj; ++u) {
                const double dy = s * (y[u] - target[u]) / en;
                ws.d_pre[u] = dy * activation_grad(p.post_activation, u, pre_y[u], y[u]);
            }
            for (std::size_t r = 0; r < sj; ++r) {
                double* g = ws.carry.data() + r * cols;
                const double dp = ws.d_pre[r];
                for (std::size_t c = 0; c < si; ++c) g[c] += dp * ai[c];
                g[si] += dp;
            }
        }
        // Back through w^t = w^{t-1} + eta * beta (.) (w_hat - w^{t-1}).
        const double eta = ws.eta_t[t];
        const double* out = ws.fm_out_t.data() + t * 2 * n;
        const double* wp = ws.w_prev.data() + t * n;
        double d_eta = tau_weight * p.tau;
        for (std::size_t k = 0; k < n; ++k) {
            const double braw = out[n + k];
            const double beta = squash_unit(braw);
            const double diff = out[k] - wp[k];
            const double G = ws.carry[k];
            d_eta += G * beta * diff;
            ws.d_out[k] = G * eta * beta;
            ws.d_out[n + k] = G * eta * diff * squash_unit_grad(braw);
            ws.carry[k] = G * (1.0 - eta * beta);
        }
        ws.fg_d[0] = d_eta * squash_unit_grad(ws.q_raw_t[t]);
        grad->fm.backward(q.fm, {am, sm}, {ws.fm_hidden_t.data() + t * ws.fm_hidden.size(), ws.fm_hidden.size()},
                          ws.d_out);
        if (ws.fg_d[0] != 0.0) {
            std::copy(ai, ai + si, ws.fg_in.begin());
            std::copy(aj, aj + sj, ws.fg_in.begin() + static_cast<std::ptrdiff_t>(si));
            grad->fg.backward(q.fg, ws.fg_in,
                              {ws.fg_hidden_t.data() + t * ws.fg_hidden.size(), ws.fg_hidden.size()}, ws.fg_d);
        }
    }
    return loss;
}

} // namespace detail

inline double guided_loss(const ModulatorParams& q, const ReplayProblem& p, std::span<const std::size_t> subset) {
    detail::ReplayWorkspace ws;
    double loss = 0.0;
    for (std::size_t h : subset) loss += detail::replay_instance(p, p.instances[h], q, nullptr, ws);
    return loss;
}

inline double guided_loss_and_grad(const ModulatorParams& q, const ReplayProblem& p,
                                   std::span<const std::size_t> subset, ModulatorGrad& grad) {
    grad.zero();
    detail::ReplayWorkspace ws;
    double loss = 0.0;
    for (std::size_t h : subset) loss += detail::replay_instance(p, p.instances[h], q, &grad, ws);
    return loss;
}

/// Loss of a candidate that never updates (eta = 0): the weights stay innate.
inline double zero_update_loss(const ReplayProblem& p, std::span<const std::size_t> subset) {
    double loss = 0.0;
    std::vector<double> pre(p.size_j), y(p.size_j);
    for (std::size_t h : subset) {
        const auto& inst = p.instances[h];
        for (std::size_t t = 0; t < inst.steps; ++t) {
            std::fill(pre.begin(), pre.end(), 0.0);
            affine_acc(p.innate_weights, {inst.a_i.data() + t * p.size_i, p.size_i}, pre);
            apply_activation(p.post_activation, pre, y);
            double e2 = 0.0;
            for (std::size_t u = 0; u < p.size_j; ++u) {
                const double e = y[u] - inst.target_out[t * p.size_j + u];
                e2 += e * e;
            }
            loss += inst.weight * std::sqrt(e2);
        }
    }
    return loss;
}

// -- modulatory: signSGD -----------------------------------------------------

/// One signSGD step: theta -= step * sign(g). sign(0) = 0.
inline double sign_step(double theta, double g, double step) noexcept {
    if (g > 0.0) return theta - step;
    if (g < 0.0) return theta + step;
    return theta;
}

struct GuidedLossReport {
    std::vector<double> train_losses;
    std::vector<double> validation_losses;
    int epochs = 0;
    bool stalled = false;
    bool accepted = false;
    double initial_validation = 0.0;
    double best_validation = 0.0;
    double zero_update_validation = 0.0;
};

struct GuidedResult {
    ModulatorParams params;
    GuidedLossReport report;
};

/// Split instance indices [0, n) into training and validation sets by a
/// seeded shuffle, keeping the configured proportion.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_instances(std::size_t n,
                                                                                      const GuidedSettings& gs,
                                                                                      Stream& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) std::swap(idx[k - 1], idx[rng.index(k)]);
    const std::size_t total = gs.train_instances + gs.validation_instances;
    std::size_t n_train = total == 0 ? n : (n * gs.train_instances + total / 2) / total;
    if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return {std::move(train), std::move(val)};
}

inline GuidedResult optimise_modulator(const ModulatorParams& start, const ReplayProblem& p,
                                       std::span<const std::size_t> train, std::span<const std::size_t> val,
                                       const GuidedSettings& gs) {
    GuidedResult res{start, {}};
    auto& rep = res.report;
    if (train.empty() || val.empty()) return res;

    ModulatorParams theta = start;
    ModulatorGrad grad(theta);
    rep.zero_update_validation = zero_update_loss(p, val);
    double step = gs.initial_step;
    double prev_train = 0.0;
    double best_val = 0.0;
    double stall_ref = 0.0;
    int since_improvement = 0;

    for (int epoch = 0; epoch < gs.max_epochs; ++epoch) {
        const double train_loss = guided_loss_and_grad(theta, p, train, grad);
        const double val_loss = guided_loss(theta, p, val);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            res.params = start;
            rep.accepted = false;
            return res;
        }
        if (epoch > 0) step *= (train_loss > prev_train) ? gs.step_shrink : gs.step_growth;
        prev_train = train_loss;
        rep.train_losses.push_back(train_loss);
        rep.validation_losses.push_back(val_loss);
        rep.epochs = epoch + 1;
        if (epoch == 0) {
            rep.initial_validation = best_val = stall_ref = val_loss;
        } else {
            if (val_loss < best_val) {
                best_val = val_loss;
                res.params = theta;
            }
            if (val_loss < stall_ref * (1.0 - gs.min_relative_improvement)) {
                stall_ref = val_loss;
                since_improvement = 0;
            } else if (++since_improvement >= gs.stall_patience) {
                rep.stalled = true;
                break;
            }
        }
        // theta -= step * sign(grad), in parameter-visit order.
        std::vector<double> flat;
        flat.reserve(theta.fm.parameter_count() + theta.fg.parameter_count());
        grad.fm.for_each_param([&](double g) { flat.push_back(g); });
        grad.fg.for_each_param([&](double g) { flat.push_back(g); });
        std::size_t idx = 0;
        theta.fm.for_each_param([&](double& v) { v = sign_step(v, flat[idx++], step); });
        theta.fg.for_each_param([&](double& v) { v = sign_step(v, flat[idx++], step); });
    }
    rep.best_validation = best_val;
    rep.accepted = best_val < rep.initial_validation;
    return res;
}

/// Fit modulatory projection `q` (modulating column q.modulating, target
/// projection q.target_pre -> q.target_post) to the parent's learning trace.
/// Returns nullopt if the trace cannot support the fit.
inline std::optional<std::pair<ModulatoryProjection, GuidedLossReport>> guided_modulatory(
    const ModulatoryProjection& q, const Genotype& parent, const LearningTrace& trace, const GuidedSettings& gs,
    Stream& rng) {
    const auto k = parent.find_activatory(q.target_pre, q.target_post);
    if (!k) return std::nullopt;
    auto problem = make_replay_problem(parent, trace, q.modulating, *k, gs);
    if (!problem || problem->instances.size() < 2) return std::nullopt;
    auto [train, val] = split_instances(problem->instances.size(), gs, rng);
    GuidedResult r = optimise_modulator({q.fm, q.fg}, *problem, train, val, gs);
    ModulatoryProjection out = q;
    out.fm = std::move(r.params.fm);
    out.fg = std::move(r.params.fg);
    return std::make_pair(std::move(out), std::move(r.report));
}

} // namespace nmlab
