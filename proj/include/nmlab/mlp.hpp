#pragma once

/// @file mlp.hpp
/// @brief One-hidden-layer tanh MLP with linear output, plus its reverse pass.
///
/// Used for the two internal networks of a modulatory projection. The output
/// activation (linear / squash) is applied by the caller.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace nmlab {

struct Mlp {
    Matrix w1;               // hidden x input
    std::vector<double> b1;  // hidden
    Matrix w2;               // output x hidden
    std::vector<double> b2;  // output

    std::size_t input_size() const noexcept { return w1.cols; }
    std::size_t hidden_size() const noexcept { return w1.rows; }
    std::size_t output_size() const noexcept { return w2.rows; }
    std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }

    static Mlp random(std::size_t in, std::size_t hidden, std::size_t out, double range, Stream& rng) {
        Mlp m;
        m.w1 = random_uniform_matrix(hidden, in, -range, range, rng);
        m.b1.resize(hidden);
        for (double& b : m.b1) b = rng.uniform(-range, range);
        m.w2 = random_uniform_matrix(out, hidden, -range, range, rng);
        m.b2.resize(out);
        for (double& b : m.b2) b = rng.uniform(-range, range);
        return m;
    }

    static Mlp zeros(std::size_t in, std::size_t hidden, std::size_t out) {
        Mlp m;
        m.w1 = Matrix(hidden, in);
        m.b1.assign(hidden, 0.0);
        m.w2 = Matrix(out, hidden);
        m.b2.assign(out, 0.0);
        return m;
    }

    /// Visit every parameter in a fixed order: w1, b1, w2, b2.
    template <typename F>
    void for_each_param(F&& f) {
        for (double& v : w1.data) f(v);
        for (double& v : b1) f(v);
        for (double& v : w2.data) f(v);
        for (double& v : b2) f(v);
    }
    template <typename F>
    void for_each_param(F&& f) const {
        for (double v : w1.data) f(v);
        for (double v : b1) f(v);
        for (double v : w2.data) f(v);
        for (double v : b2) f(v);
    }

    /// hidden <- tanh(w1 x + b1); out <- w2 hidden + b2.
    void forward(std::span<const double> x, std::span<double> hidden, std::span<double> out) const noexcept {
        std::copy(b1.begin(), b1.end(), hidden.begin());
        matvec_acc(w1, x, hidden);
        for (double& h : hidden) h = std::tanh(h);
        std::copy(b2.begin(), b2.end(), out.begin());
        matvec_acc(w2, hidden, out);
    }

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Gradient accumulator with the same layout as an Mlp.
struct MlpGrad {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    std::vector<double> scratch;  // hidden-sized

    explicit MlpGrad(const Mlp& m)
        : w1(m.w1.rows, m.w1.cols), b1(m.b1.size(), 0.0), w2(m.w2.rows, m.w2.cols), b2(m.b2.size(), 0.0),
          scratch(m.b1.size(), 0.0) {}

    void zero() {
        w1.fill(0.0);
        std::fill(b1.begin(), b1.end(), 0.0);
        w2.fill(0.0);
        std::fill(b2.begin(), b2.end(), 0.0);
    }

    template <typename F>
    void for_each_param(F&& f) const {
        for (double v : w1.data) f(v);
        for (double v : b1) f(v);
        for (double v : w2.data) f(v);
        for (double v : b2) f(v);
    }

    /// Accumulate parameter gradients given dL/d(out) for a cached forward
    /// (x, hidden). Input gradients are not needed by any caller.
    void backward(const Mlp& m, std::span<const double> x, std::span<const double> hidden,
                  std::span<const double> d_out) {
        outer_acc(w2, d_out, hidden);
        for (std::size_t k = 0; k < d_out.size(); ++k) b2[k] += d_out[k];
        std::fill(scratch.begin(), scratch.end(), 0.0);
        matvec_t_acc(m.w2, d_out, scratch);
        for (std::size_t k = 0; k < scratch.size(); ++k) scratch[k] *= (1.0 - hidden[k] * hidden[k]);
        outer_acc(w1, scratch, x);
        for (std::size_t k = 0; k < scratch.size(); ++k) b1[k] += scratch[k];
    }
};

/// x + 0.5 clamped to [0, 1].
inline double squash_unit(double raw) noexcept { return std::min(1.0, std::max(0.0, raw + 0.5)); }

/// d squash / d raw: 1 strictly inside the linear range, 0 where clamped.
inline double squash_unit_grad(double raw) noexcept {
    const double v = raw + 0.5;
    return (v > 0.0 && v < 1.0) ? 1.0 : 0.0;
}

} // namespace nmlab
