#pragma once
// The square-integrable Volterra kernel K_h(t,s) that turns Wiener paths into
// fractional ones, the isometry and operator built from it, the inverse used
// by the change-of-measure density, and the Wiener <-> fractional transfer.
// Everything here requires h < 1/2 except the h = 1/2 reductions noted below.

#include "sfbm/frac_calc.hpp"
#include "sfbm/grid.hpp"
#include "sfbm/path_batch.hpp"
#include "sfbm/quadrature.hpp"
#include "sfbm/special_functions.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sfbm {

// Normalization c_h = sqrt(2h / ((1-2h) B(1-2h, h+1/2))); the formula has a
// pole at h = 1/2 and is only meaningful left of it.
inline double c_h(HurstParam hp) {
    const double h = hp.h;
    if (!(h < 0.5)) throw std::invalid_argument("c_h: defined for h < 1/2 only");
    return std::sqrt(2.0 * h / ((1.0 - 2.0 * h) * beta_fn(1.0 - 2.0 * h, h + 0.5)));
}

namespace detail {

// F(t,s) = int_s^t u^{h-3/2} (u-s)^{h-1/2} du. The substitution u = s/w maps
// this onto an incomplete beta tail,
//   F = s^{2h-1} int_{s/t}^1 w^{-2h} (1-w)^{h-1/2} dw
//     = s^{2h-1} B(1-2h, h+1/2) I_y(h+1/2, 1-2h),  y = (t-s)/t,
// which evaluates in O(1) with uniform accuracy in s. (Quadrature in the
// original variable develops a boundary layer of width s^{h+1/2} and plateau
// height s^{h-3/2}, which defeats any fixed bisection depth and overflows
// once s drops below roughly 1e-200; endpoint-singular outer rules and the
// first weight cell of each row evaluate exactly that regime.)
inline double kh_inner_integral(double h, double t, double s) {
    return std::pow(s, 2.0 * h - 1.0) * beta_fn(1.0 - 2.0 * h, h + 0.5) *
           reg_inc_beta(h + 0.5, 1.0 - 2.0 * h, (t - s) / t);
}

inline double kh_kernel_with_c(double c, double h, double t, double s) {
    const double direct = std::pow(t / s, h - 0.5) * std::pow(t - s, h - 0.5);
    // s^{1/2-h} * F = s^{h-1/2} * B * I_y: fold the powers so nothing
    // overflows before it cancels.
    const double tail = (0.5 - h) * std::pow(s, h - 0.5) *
                        beta_fn(1.0 - 2.0 * h, h + 0.5) *
                        reg_inc_beta(h + 0.5, 1.0 - 2.0 * h, (t - s) / t);
    return c * (direct + tail);
}

} // namespace detail

// K_h(t,s) = c_h [ (t/s)^{h-1/2} (t-s)^{h-1/2} + (1/2-h) s^{1/2-h} F(t,s) ]
// for 0 < s < t; it blows up like s^{h-1/2} at s -> 0 and (t-s)^{h-1/2} at
// s -> t, both square-integrable.
inline double kh_kernel(HurstParam hp, double t, double s) {
    if (!(s > 0.0 && s < t)) throw std::invalid_argument("kh_kernel: need 0 < s < t");
    return detail::kh_kernel_with_c(c_h(hp), hp.h, t, s);
}

// Lower-triangular quadrature weights for B(t_i) = sum_{j<i} w(i,j) dW_j.
// Row i covers cells [s_j, s_{j+1}], j < i. Bulk cells take the kernel at the
// cell midpoint. The `layer` cells nearest each singular end (s -> 0 and
// s -> t_i) instead take the root-mean-square kernel value over the cell,
// which preserves each cell's variance contribution exactly and keeps the
// marginal variance bias orders of magnitude below the midpoint-only rule.
struct VolterraWeights {
    double h = 0.5;
    TimeGrid grid;
    std::vector<double> w;  // packed rows: row i at offset i*(i-1)/2, i = 1..n

    double weight(std::size_t i, std::size_t j) const { return w[i * (i - 1) / 2 + j]; }
};

inline VolterraWeights volterra_weights(HurstParam hp, const TimeGrid& grid) {
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt();
    VolterraWeights vw;
    vw.h = hp.h;
    vw.grid = grid;
    vw.w.assign(n * (n + 1) / 2, 1.0);
    if (hp.h == 0.5) return vw;  // K = 1: plain cumulative sums
    if (hp.h > 0.5)
        throw std::invalid_argument("volterra_weights: kernel form requires h <= 1/2");
    const double c = c_h(hp);
    const double h = hp.h;
    constexpr std::size_t layer = 8;
    for (std::size_t i = 1; i <= n; ++i) {
        const double t = grid.node(i);
        double* row = vw.w.data() + i * (i - 1) / 2;
        for (std::size_t j = 0; j < i; ++j) {
            const bool rms = j < layer || j + layer >= i;
            if (!rms) {
                row[j] = detail::kh_kernel_with_c(c, h, t, (double(j) + 0.5) * dt);
                continue;
            }
            const double a = double(j) * dt, b = double(j + 1) * dt;
            auto k2 = [&](double s) {
                const double k = detail::kh_kernel_with_c(c, h, t, s);
                return k * k;
            };
            // K^2 has integrable endpoint singularities in the first and last
            // cell of the row; the tanh-sinh rule absorbs them.
            const double mass = (j == 0 || j + 1 == i)
                                    ? integrate_tanh_sinh(k2, a, b, 1e-9)
                                    : integrate_adaptive(k2, a, b, 1e-9, 1e-14);
            row[j] = std::sqrt(mass / dt);
        }
    }
    return vw;
}

// Isometry (K*phi)(s) = c_h Gamma(h+1/2) s^{1/2-h} D_{T-}^{1/2-h}[u^{h-1/2} phi(u)](s).
// The endpoint values s in {0,T} are singular or extrapolated, so the result
// lives on the interior grid [t_1, t_{n-2}].
inline SampledFunction kh_star(HurstParam hp, const SampledFunction& phi) {
    if (!(hp.h < 0.5)) throw std::invalid_argument("kh_star: need h < 1/2");
    if (phi.a != 0.0) throw std::invalid_argument("kh_star: domain must start at 0");
    const std::size_t n = phi.size();
    if (n < 4) throw std::invalid_argument("kh_star: need >= 4 samples");
    const double h = hp.h;
    std::vector<double> weighted(n);
    weighted[0] = 0.0;  // u^{h-1/2} diverges at 0; never read by interior outputs
    for (std::size_t j = 1; j < n; ++j)
        weighted[j] = std::pow(phi.node(j), h - 0.5) * phi.values[j];
    auto D = rl_derivative_right(0.5 - h, SampledFunction(phi.a, phi.b, std::move(weighted)));
    const double front = c_h(hp) * gamma_fn(h + 0.5);
    std::vector<double> out(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i - 1] = front * std::pow(phi.node(i), 0.5 - h) * D.values[i];
    return SampledFunction(phi.node(1), phi.node(n - 2), std::move(out));
}

// Second representation of the isometry, kept as an independent cross-check:
// (K*phi)(s) = c_h Gamma(h+1/2) (D_{T-}^{1/2-h} phi)(s)
//            + c_h (1/2-h) int_s^T phi(t) (t-s)^{h-3/2} (1 - (t/s)^{h-1/2}) dt.
inline SampledFunction kh_star_integral_form(HurstParam hp, const SampledFunction& phi) {
    if (!(hp.h < 0.5)) throw std::invalid_argument("kh_star_integral_form: need h < 1/2");
    if (phi.a != 0.0)
        throw std::invalid_argument("kh_star_integral_form: domain must start at 0");
    const std::size_t n = phi.size();
    if (n < 4) throw std::invalid_argument("kh_star_integral_form: need >= 4 samples");
    const double h = hp.h;
    const double T = phi.b;
    const double c = c_h(hp);
    const double front = c * gamma_fn(h + 0.5);
    auto D = rl_derivative_right(0.5 - h, phi);
    std::vector<double> out(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double s = phi.node(i);
        auto g = [&](double t) {
            // 1 - (t/s)^{h-1/2} computed as -expm1 to survive t -> s.
            const double bracket = -std::expm1((h - 0.5) * std::log(t / s));
            return phi.value_at(t) * std::pow(t - s, h - 1.5) * bracket;
        };
        const double tail = integrate_tanh_sinh(g, s, T, 1e-10);
        out[i - 1] = front * D.values[i] + c * (0.5 - h) * tail;
    }
    return SampledFunction(phi.node(1), phi.node(n - 2), std::move(out));
}

// Operator (K_h phi)(s) = I^{2h} [ s^{1/2-h} I^{1/2-h} [ s^{h-1/2} phi ] ](s)
// on the full grid; the value at s = 0 is the exact limit 0. At h = 1/2 the
// composition collapses to the running integral.
inline SampledFunction kh_operator(HurstParam hp, const SampledFunction& phi) {
    if (phi.a != 0.0) throw std::invalid_argument("kh_operator: domain must start at 0");
    if (hp.h == 0.5) return rl_integral_left(1.0, phi);
    if (hp.h > 0.5) throw std::invalid_argument("kh_operator: need h <= 1/2");
    const double h = hp.h;
    const std::size_t n = phi.size();
    const double step = phi.step();
    std::vector<double> inner(n);
    for (std::size_t j = 1; j < n; ++j)
        inner[j] = std::pow(phi.node(j), h - 0.5) * phi.values[j];
    // The u^{h-1/2} weight diverges at u = 0 but carries finite mass; pick the
    // node value that gives the first cell the exact mass of the frozen-phi
    // power law, int_0^step u^{h-1/2} phi(0) du.
    inner[0] = std::pow(step, h - 0.5) * (2.0 * phi.values[0] / (h + 0.5)) - inner[1];
    auto A = rl_integral_left(0.5 - h, SampledFunction(phi.a, phi.b, std::move(inner)));
    std::vector<double> mid(n);
    mid[0] = 0.0;
    for (std::size_t j = 1; j < n; ++j)
        mid[j] = std::pow(A.node(j), 0.5 - h) * A.values[j];
    return rl_integral_left(2.0 * h, SampledFunction(phi.a, phi.b, std::move(mid)));
}

// Inverse (K_h^{-1} phi)(s) = s^{h-1/2} I^{1/2-h} [ u^{1/2-h} phi'(u) ](s) for
// absolutely continuous phi; the caller supplies phi' (every call site has it
// analytically). Value at s = 0 is the exact limit 0. At h = 1/2 the weights
// cancel and the result is phi' itself.
inline SampledFunction kh_inverse(HurstParam hp, const SampledFunction& phi,
                                  const SampledFunction& phi_prime) {
    if (phi.a != phi_prime.a || phi.b != phi_prime.b || phi.size() != phi_prime.size())
        throw std::invalid_argument("kh_inverse: phi and phi' must share a grid");
    if (phi.a != 0.0) throw std::invalid_argument("kh_inverse: domain must start at 0");
    if (hp.h == 0.5) return phi_prime;
    if (hp.h > 0.5) throw std::invalid_argument("kh_inverse: need h <= 1/2");
    const double h = hp.h;
    const std::size_t n = phi.size();
    std::vector<double> weighted(n);
    weighted[0] = 0.0;  // u^{1/2-h} vanishes at 0
    for (std::size_t j = 1; j < n; ++j)
        weighted[j] = std::pow(phi.node(j), 0.5 - h) * phi_prime.values[j];
    auto A = rl_integral_left(0.5 - h, SampledFunction(phi.a, phi.b, std::move(weighted)));
    std::vector<double> out(n);
    out[0] = 0.0;  // s^{h-1/2} I^{1/2-h}[...] -> 0 like s^{1/2-h}
    for (std::size_t j = 1; j < n; ++j)
        out[j] = std::pow(A.node(j), h - 0.5) * A.values[j];
    return SampledFunction(phi.a, phi.b, std::move(out));
}

// Recover the driving Wiener batch from fractional paths built with the same
// weights: a forward substitution row by row.
inline PathBatch wiener_from_fbm(const VolterraWeights& vw, const PathBatch& bh) {
    if (bh.kind != PathKind::fractional)
        throw std::invalid_argument("wiener_from_fbm: input must be a fractional batch");
    require_same_grid(vw.grid, bh.grid, "wiener_from_fbm");
    const std::size_t n = vw.grid.n_steps;
    for (std::size_t i = 1; i <= n; ++i)
        if (!(vw.weight(i, i - 1) > 1e-300))
            throw std::runtime_error("wiener_from_fbm: vanishing diagonal weight in row " +
                                     std::to_string(i));
    PathBatch out(bh.dim, bh.grid, bh.count, bh.seed, PathKind::wiener);
    std::vector<double> dw(n);
    for (std::size_t p = 0; p < bh.count; ++p)
        for (std::size_t comp = 0; comp < bh.dim; ++comp) {
            for (std::size_t i = 1; i <= n; ++i) {
                double acc = 0.0;
                const double* row = vw.w.data() + i * (i - 1) / 2;
                for (std::size_t j = 0; j + 1 < i; ++j) acc += row[j] * dw[j];
                dw[i - 1] = (bh.at(p, i, comp) - acc) / row[i - 1];
                out.at(p, i, comp) = out.at(p, i - 1, comp) + dw[i - 1];
            }
        }
    return out;
}

inline PathBatch wiener_from_fbm(HurstParam hp, const PathBatch& bh) {
    return wiener_from_fbm(volterra_weights(hp, bh.grid), bh);
}

} // namespace sfbm
