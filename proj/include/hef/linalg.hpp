#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hef/common.hpp"

namespace hef {

using DVec = std::vector<double>;

/// Row-major dense matrix of 64-bit floats. Training math runs in doubles;
/// stored vectors are 32-bit.
struct DMat {
    size_t rows = 0;
    size_t cols = 0;
    DVec a;

    DMat() = default;
    DMat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return a[r * cols + c]; }
    double at(size_t r, size_t c) const { return a[r * cols + c]; }
    size_t size() const { return a.size(); }
};

inline DVec matvec(const DMat& m, const DVec& x) {
    require(x.size() == m.cols, ErrorKind::contract, "matvec: dimension mismatch");
    DVec y(m.rows, 0.0);
    for (size_t r = 0; r < m.rows; ++r) {
        double s = 0.0;
        const double* row = &m.a[r * m.cols];
        for (size_t c = 0; c < m.cols; ++c)
            s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

/// y = M^T x, the pullback of matvec.
inline DVec mat_t_vec(const DMat& m, const DVec& x) {
    require(x.size() == m.rows, ErrorKind::contract, "mat_t_vec: dimension mismatch");
    DVec y(m.cols, 0.0);
    for (size_t r = 0; r < m.rows; ++r) {
        const double* row = &m.a[r * m.cols];
        for (size_t c = 0; c < m.cols; ++c)
            y[c] += row[c] * x[r];
    }
    return y;
}

/// M += u v^T.
inline void add_outer(DMat& m, const DVec& u, const DVec& v) {
    require(u.size() == m.rows && v.size() == m.cols, ErrorKind::contract,
            "add_outer: dimension mismatch");
    for (size_t r = 0; r < m.rows; ++r) {
        double* row = &m.a[r * m.cols];
        for (size_t c = 0; c < m.cols; ++c)
            row[c] += u[r] * v[c];
    }
}

inline void add_to(DVec& y, const DVec& x) {
    require(y.size() == x.size(), ErrorKind::contract, "add_to: dimension mismatch");
    for (size_t i = 0; i < y.size(); ++i)
        y[i] += x[i];
}

inline double dot_d(const DVec& a, const DVec& b) {
    require(a.size() == b.size(), ErrorKind::contract, "dot_d: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

/// GELU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
/// The variant is fixed exactly for cross-implementation reproducibility.
inline double gelu(double x) {
    constexpr double kS = 0.7978845608028654; // sqrt(2/pi)
    constexpr double kA = 0.044715;
    return 0.5 * x * (1.0 + std::tanh(kS * (x + kA * x * x * x)));
}

inline double gelu_grad(double x) {
    constexpr double kS = 0.7978845608028654;
    constexpr double kA = 0.044715;
    double t = std::tanh(kS * (x + kA * x * x * x));
    double dt = (1.0 - t * t) * kS * (1.0 + 3.0 * kA * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * dt;
}

/// Seeded scaled-normal init, std = 1/sqrt(fan_in).
inline void init_scaled_normal(DMat& m, Rng& rng) {
    double std_dev = m.cols > 0 ? 1.0 / std::sqrt(static_cast<double>(m.cols)) : 0.0;
    for (double& v : m.a)
        v = rng.normal() * std_dev;
}

inline DVec to_dvec(std::span<const float> v) { return DVec(v.begin(), v.end()); }

inline Vec to_f32(const DVec& v) {
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<float>(v[i]);
    return out;
}

/// Normalize in double precision; a norm below 1e-30 collapses to e_0 with a
/// zero jacobian (callers treat the fallback as locally constant).
inline DVec normalize_or_e0(const DVec& v, double* out_norm = nullptr) {
    double n = std::sqrt(dot_d(v, v));
    if (out_norm)
        *out_norm = n;
    DVec y(v.size(), 0.0);
    if (n < 1e-30) {
        if (!y.empty())
            y[0] = 1.0;
        return y;
    }
    for (size_t i = 0; i < v.size(); ++i)
        y[i] = v[i] / n;
    return y;
}

inline bool all_finite(const DVec& v) {
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

} // namespace hef
