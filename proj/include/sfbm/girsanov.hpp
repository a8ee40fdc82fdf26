#pragma once
// Change-of-measure density for drifts under the fractional driver: the
// per-path weight xi_T = exp(-int v dW - 1/2 int v^2) with v the kernel
// inverse of the accumulated drift, and the exponential-moment stability
// probe built on the same pipeline with a mollified occupation drift.

#include "sfbm/fbm.hpp"
#include "sfbm/frac_calc.hpp"
#include "sfbm/grid.hpp"
#include "sfbm/kernel_ops.hpp"
#include "sfbm/path_batch.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfbm {

// Drift description shared by the SDE solver and the density experiments.
// evaluator writes the dim drift components for state x at time t;
// jacobian (optional) writes the dim*dim matrix out[a*dim+p] = d b_a / d x_p
// and hessian (optional) the dim^3 tensor out[(a*dim+p)*dim+q] =
// d^2 b_a / d x_p d x_q, both row-major; analytic_rate marks that the time
// derivative of the induced shift is available in closed form (every drift
// used here is).
struct DriftSpec {
    std::function<void(double t, const double* x, std::size_t dim, double* out)> evaluator;
    std::function<void(double t, const double* x, std::size_t dim, double* out)> jacobian;
    std::function<void(double t, const double* x, std::size_t dim, double* out)> hessian;
    std::string tag;
    bool analytic_rate = false;
};

namespace detail {

// Gaussian density with covariance eps * Identity, as a function of the
// squared distance r2.
inline double gaussian_kernel(double r2, double eps, std::size_t d) {
    constexpr double two_pi = 6.28318530717958647692;
    return std::pow(two_pi * eps, -0.5 * double(d)) * std::exp(-0.5 * r2 / eps);
}

inline double trapezoid_squared(const SampledFunction& v) {
    const double dt = v.step();
    double q = 0.5 * (v.values.front() * v.values.front() + v.values.back() * v.values.back());
    for (std::size_t j = 1; j + 1 < v.size(); ++j) q += v.values[j] * v.values[j];
    return q * dt;
}

} // namespace detail

// Per-path density xi_T for a deterministic drift u (one sampled component
// per driver component, on the driver's grid): with v_c the kernel inverse of
// t -> int_0^t u_c, xi_T = exp(-sum_c sum_j v_c(t_j) dW_j^c - 1/2 sum_c int v_c^2),
// the stochastic integral as a left-point sum so the density stays an
// exponential martingale under refinement.
inline std::vector<double> girsanov_weight(HurstParam hp, const std::vector<SampledFunction>& u,
                                           const PathBatch& w) {
    if (w.kind != PathKind::wiener)
        throw std::invalid_argument("girsanov_weight: driver must be a Wiener batch");
    if (u.size() != w.dim)
        throw std::invalid_argument("girsanov_weight: one drift component per driver component");
    const std::size_t n = w.grid.n_steps;
    std::vector<SampledFunction> v;
    v.reserve(u.size());
    double quad = 0.0;
    for (const auto& uc : u) {
        if (uc.a != 0.0 || uc.b != w.grid.t_end || uc.size() != w.grid.n_nodes())
            throw std::invalid_argument("girsanov_weight: drift grid must match the driver");
        auto shift = rl_integral_left(1.0, uc);  // running trapezoid of u
        v.push_back(kh_inverse(hp, shift, uc));
        quad += detail::trapezoid_squared(v.back());
    }
    std::vector<double> out(w.count);
    for (std::size_t p = 0; p < w.count; ++p) {
        double ito = 0.0;
        for (std::size_t c = 0; c < w.dim; ++c) {
            const auto& vc = v[c].values;
            for (std::size_t j = 0; j < n; ++j)
                ito += vc[j] * (w.at(p, j + 1, c) - w.at(p, j, c));
        }
        const double e = -ito - 0.5 * quad;
        if (!std::isfinite(e)) throw std::runtime_error("girsanov_weight: non-finite exponent");
        out[p] = std::exp(e);
    }
    return out;
}

struct ExpMomentEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double censored_fraction = 0.0;  // paths whose exponent hit the cap
};

// Monte-Carlo estimate of E[exp(k int_0^T v^2 dt)] where v is the kernel
// inverse of the mollified occupation shift t -> int_0^t phi_{x,eps}(B_u) du
// along fractional paths. Exponents are capped at 700 (just under the double
// exp overflow) and the capped mass reported, since finiteness, not the tail,
// is the question. Fixed-order accumulation keeps the result deterministic.
inline ExpMomentEstimate exp_moment_probe(HurstParam hp, std::size_t d, double k, double eps,
                                          const std::vector<double>& x, std::size_t count,
                                          const TimeGrid& grid, std::uint64_t seed) {
    if (!(eps > 0.0)) throw std::domain_error("exp_moment_probe: need eps > 0");
    if (x.size() != d) throw std::invalid_argument("exp_moment_probe: level point must have dim d");
    if (count < 2) throw std::invalid_argument("exp_moment_probe: need count >= 2");
    constexpr double cap = 700.0;
    const std::size_t n_nodes = grid.n_nodes();
    std::vector<double> u_vals(n_nodes);
    // Capped values reach exp(700) ~ 1e304, whose square overflows double;
    // extended precision keeps the dispersion finite.
    long double mean = 0.0L, m2 = 0.0L;
    std::size_t censored = 0;
    const std::size_t chunk = 256;
    for (std::size_t first = 0; first < count; first += chunk) {
        const std::size_t m = std::min(chunk, count - first);
        auto b = sample_fbm_circulant(hp, grid, d, m, seed, first);
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t i = 0; i < n_nodes; ++i) {
                double r2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = b.at(p, i, c) - x[c];
                    r2 += diff * diff;
                }
                u_vals[i] = detail::gaussian_kernel(r2, eps, d);
            }
            SampledFunction u(0.0, grid.t_end, u_vals);
            auto shift = rl_integral_left(1.0, u);
            auto v = kh_inverse(hp, shift, u);
            double e = k * detail::trapezoid_squared(v);
            if (e > cap) {
                e = cap;
                ++censored;
            }
            const long double val = std::exp((long double)e);
            // Welford in path order.
            const long double idx = (long double)(first + p + 1);
            const long double delta = val - mean;
            mean += delta / idx;
            m2 += delta * (val - mean);
        }
    }
    ExpMomentEstimate out;
    out.estimate = double(mean);
    out.std_error = double(std::sqrt(m2 / (long double)(count - 1) / (long double)count));
    out.censored_fraction = double(censored) / double(count);
    return out;
}

} // namespace sfbm
