#pragma once
// Riemann-Liouville fractional integrals and Marchaud-form fractional
// derivatives of order alpha in (0,1) on uniformly sampled functions.
//
// Scheme: product integration. The input is interpolated piecewise-linearly
// and the singular kernel moments over each cell are integrated in closed
// form, so constants and linear inputs are reproduced to rounding. Cost is
// O(n^2) for the full output grid.

#include "sfbm/grid.hpp"
#include "sfbm/special_functions.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sfbm {

namespace detail {

inline void check_integral_order(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("rl_integral: need alpha in (0,1]");
}

inline void check_derivative_order(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("rl_derivative: need alpha in (0,1)");
}

inline SampledFunction reversed(const SampledFunction& f) {
    std::vector<double> v(f.values.rbegin(), f.values.rend());
    return SampledFunction(f.a, f.b, std::move(v));
}

} // namespace detail

// (I^alpha_{a+} f)(x_i) for every grid node; value 0 at x_0 = a.
inline SampledFunction rl_integral_left(double alpha, const SampledFunction& f) {
    detail::check_integral_order(alpha);
    const std::size_t n = f.size();
    const double h = f.step();
    const double ha = std::pow(h, alpha);
    // Cell moments against the two hat functions, k = #cells between the
    // output node and the cell's right edge:
    //   m0(k) weights the sample at the cell's left node,
    //   m1(k) weights the sample at the cell's right node.
    std::vector<double> m0(n), m1(n), A(n + 1), B(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        A[k] = std::pow(double(k), alpha);
        B[k] = std::pow(double(k), alpha + 1.0);
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double dA = A[k] - A[k - 1], dB = B[k] - B[k - 1];
        m0[k] = ha * (dB / (alpha + 1.0) - double(k - 1) * dA / alpha);
        m1[k] = ha * (double(k) * dA / alpha - dB / (alpha + 1.0));
    }
    const double inv_gamma = 1.0 / gamma_fn(alpha);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 1; k <= i; ++k)
            s += f.values[i - k] * m0[k] + f.values[i - k + 1] * m1[k];
        out[i] = inv_gamma * s;
    }
    return SampledFunction(f.a, f.b, std::move(out));
}

inline SampledFunction rl_integral_right(double alpha, const SampledFunction& f) {
    SampledFunction g = rl_integral_left(alpha, detail::reversed(f));
    return detail::reversed(g);
}

// Marchaud form of (D^alpha_{a+} f)(x_i):
//   ( f(x)/(x-a)^alpha + alpha * int_a^x (f(x)-f(y)) (x-y)^{-alpha-1} dy ) / Gamma(1-alpha).
// The difference f(x)-f(y) is interpolated piecewise-linearly; it vanishes at
// y = x, which removes the non-integrable part of the kernel. The value at
// x_0 = a is filled by one-sided extrapolation from the next two nodes.
//
// Starting correction: fractional integrals of smooth functions behave like
// (x-a)^alpha near the base point, and a piecewise-linear interpolant misses
// that by an O(1) relative margin on the first cells at any step size. The
// scheme is therefore made exact on span{1, x, (x-a)^alpha}: the amplitude of
// the (x-a)^alpha component is read off the first three samples through a
// functional that annihilates constants and linears, and the quadrature's own
// error on that monomial (a pure function of the node index) is added back.
inline SampledFunction rl_derivative_left(double alpha, const SampledFunction& f) {
    detail::check_derivative_order(alpha);
    const std::size_t n = f.size();
    if (n < 3) throw std::invalid_argument("rl_derivative: need >= 3 samples");
    const double h = f.step();
    const double hma = std::pow(h, -alpha);
    std::vector<double> d0(n), d1(n), Ap(n + 1), C(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        Ap[k] = std::pow(double(k), 1.0 - alpha);
        C[k] = k == 0 ? 0.0 : std::pow(double(k), -alpha);  // C[0] unused
    }
    d0[1] = hma / (1.0 - alpha);
    d1[1] = 0.0;  // multiplies f(x)-f(x) = 0 exactly
    for (std::size_t k = 2; k < n; ++k) {
        const double dAp = Ap[k] - Ap[k - 1], dC = C[k] - C[k - 1];
        d0[k] = hma * (dAp / (1.0 - alpha) + double(k - 1) * dC / alpha);
        d1[k] = hma * (double(k) * (-dC) / alpha - dAp / (1.0 - alpha));
    }
    // q samples (x-a)^alpha; D^alpha maps it to the constant Gamma(1+alpha).
    std::vector<double> q(n);
    for (std::size_t j = 0; j < n; ++j) q[j] = std::pow(double(j) * h, alpha);
    const double amp = (f.values[0] - 2.0 * f.values[1] + f.values[2]) /
                       ((std::pow(2.0, alpha) - 2.0) * std::pow(h, alpha));
    const double d_exact = gamma_fn(1.0 + alpha);
    const double inv_gamma = 1.0 / gamma_fn(1.0 - alpha);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double fi = f.values[i], qi = q[i];
        double s = 0.0, t = 0.0;
        for (std::size_t k = 1; k <= i; ++k) {
            s += (fi - f.values[i - k]) * d0[k];
            t += (qi - q[i - k]) * d0[k];
            if (k >= 2) {
                s += (fi - f.values[i - k + 1]) * d1[k];
                t += (qi - q[i - k + 1]) * d1[k];
            }
        }
        const double px = std::pow(double(i) * h, -alpha);
        const double q_err = d_exact - inv_gamma * (qi * px + alpha * t);
        out[i] = inv_gamma * (fi * px + alpha * s) + amp * q_err;
    }
    out[0] = 2.0 * out[1] - out[2];
    return SampledFunction(f.a, f.b, std::move(out));
}

inline SampledFunction rl_derivative_right(double alpha, const SampledFunction& f) {
    SampledFunction g = rl_derivative_left(alpha, detail::reversed(f));
    return detail::reversed(g);
}

} // namespace sfbm
