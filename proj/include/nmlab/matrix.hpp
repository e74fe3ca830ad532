#pragma once

/// @file matrix.hpp
/// @brief Minimal row-major dense matrix used for projection weights and MLP layers.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rng.hpp"

namespace nmlab {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data.data() + r * cols, cols}; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix random_uniform_matrix(std::size_t r, std::size_t c, double lo, double hi, Stream& rng) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

/// out += m * x
inline void matvec_acc(const Matrix& m, std::span<const double> x, std::span<double> out) noexcept {
    assert(x.size() == m.cols && out.size() == m.rows);
    const double* w = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, w += m.cols) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += w[c] * x[c];
        out[r] += acc;
    }
}

/// out += m^T * y
inline void matvec_t_acc(const Matrix& m, std::span<const double> y, std::span<double> out) noexcept {
    assert(y.size() == m.rows && out.size() == m.cols);
    const double* w = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, w += m.cols) {
        const double yr = y[r];
        for (std::size_t c = 0; c < m.cols; ++c) out[c] += w[c] * yr;
    }
}

/// g += y x^T
inline void outer_acc(Matrix& g, std::span<const double> y, std::span<const double> x) noexcept {
    assert(y.size() == g.rows && x.size() == g.cols);
    double* w = g.data.data();
    for (std::size_t r = 0; r < g.rows; ++r, w += g.cols) {
        const double yr = y[r];
        for (std::size_t c = 0; c < g.cols; ++c) w[c] += yr * x[c];
    }
}

/// Affine projection: the last column of m is a bias. out += m[:, :-1] x + m[:, -1]
inline void affine_acc(const Matrix& m, std::span<const double> x, std::span<double> out) noexcept {
    assert(x.size() + 1 == m.cols && out.size() == m.rows);
    const std::size_t n = x.size();
    const double* w = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, w += m.cols) {
        double acc = w[n];
        for (std::size_t c = 0; c < n; ++c) acc += w[c] * x[c];
        out[r] += acc;
    }
}

/// out += m[:, :-1]^T y
inline void affine_t_acc(const Matrix& m, std::span<const double> y, std::span<double> out) noexcept {
    assert(y.size() == m.rows && out.size() + 1 == m.cols);
    const std::size_t n = out.size();
    const double* w = m.data.data();
    for (std::size_t r = 0; r < m.rows; ++r, w += m.cols) {
        const double yr = y[r];
        for (std::size_t c = 0; c < n; ++c) out[c] += w[c] * yr;
    }
}

/// g += y [x; 1]^T
inline void outer_affine_acc(Matrix& g, std::span<const double> y, std::span<const double> x) noexcept {
    assert(y.size() == g.rows && x.size() + 1 == g.cols);
    const std::size_t n = x.size();
    double* w = g.data.data();
    for (std::size_t r = 0; r < g.rows; ++r, w += g.cols) {
        const double yr = y[r];
        for (std::size_t c = 0; c < n; ++c) w[c] += yr * x[c];
        w[n] += yr;
    }
}

} // namespace nmlab
