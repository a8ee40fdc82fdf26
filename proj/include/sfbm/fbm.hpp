#pragma once
// Fractional Brownian motion sampling, three ways: dense covariance
// factorization (exact, small grids), circulant embedding of the increment
// process (exact when the embedding is nonnegative, O(n log n)), and the
// Volterra transform of an explicit Wiener path (couples the two processes,
// which the change-of-measure experiments need).
//
// All samplers draw from counter-based streams keyed by (seed, path,
// component, domain), so batches are reproducible under any scheduling.

#include "sfbm/fft.hpp"
#include "sfbm/grid.hpp"
#include "sfbm/kernel_ops.hpp"
#include "sfbm/path_batch.hpp"
#include "sfbm/rng.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfbm {

// E[B^h_t B^h_s] = (t^{2h} + s^{2h} - |t-s|^{2h}) / 2 per scalar component.
inline double fbm_covariance(HurstParam hp, double t, double s) {
    if (t < 0.0 || s < 0.0) throw std::invalid_argument("fbm_covariance: need t,s >= 0");
    const double e = 2.0 * hp.h;
    return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

// Independent N(0, dt) increments accumulated into Wiener paths. first_path
// offsets the RNG stream ids so a batch can be produced in chunks that are
// bit-identical to one big batch (path p of the chunk uses the streams of
// global path first_path + p).
inline PathBatch make_wiener_batch(const TimeGrid& grid, std::size_t dim, std::size_t count,
                                   std::uint64_t seed, std::uint64_t first_path = 0) {
    PathBatch out(dim, grid, count, seed, PathKind::wiener);
    const double sd = std::sqrt(grid.dt());
    for (std::size_t p = 0; p < count; ++p)
        for (std::size_t c = 0; c < dim; ++c) {
            const std::uint64_t stream = stream_id(first_path + p, c, stream_domain::wiener);
            for (std::size_t i = 1; i <= grid.n_steps; ++i)
                out.at(p, i, c) = out.at(p, i - 1, c) + sd * normal_draw(seed, stream, i - 1);
        }
    return out;
}

namespace detail {

// Dense lower-triangular Cholesky factor of the node covariance (t_0 = 0 is
// excluded; the process starts at 0 surely). Row-major n x n, upper part 0.
inline std::vector<double> fbm_cholesky_factor(HurstParam hp, const TimeGrid& grid) {
    const std::size_t n = grid.n_steps;
    std::vector<double> L(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double v = fbm_covariance(hp, grid.node(i + 1), grid.node(j + 1));
            for (std::size_t k = 0; k < j; ++k) v -= L[i * n + k] * L[j * n + k];
            if (i == j) {
                if (!(v > 0.0))
                    throw std::runtime_error(
                        "fbm_cholesky_factor: covariance not positive definite at pivot " +
                        std::to_string(i));
                L[i * n + i] = std::sqrt(v);
            } else {
                L[i * n + j] = v / L[j * n + j];
            }
        }
    }
    return L;
}

// Spectral data for circulant embedding of the unit-spacing increment
// autocovariance gamma(k) = (|k+1|^{2h} - 2|k|^{2h} + |k-1|^{2h}) / 2.
struct CirculantPlan {
    std::size_t m = 0;              // embedding length, power of two >= 2n
    std::vector<double> lambda;     // eigenvalues, all >= 0
};

inline CirculantPlan circulant_plan(HurstParam hp, std::size_t n) {
    const double e = 2.0 * hp.h;
    auto gamma = [&](std::size_t k) {
        const double kk = double(k);
        return 0.5 * (std::pow(kk + 1.0, e) - 2.0 * std::pow(kk, e) +
                      std::pow(std::abs(kk - 1.0), e));
    };
    std::size_t m = 2;
    while (m < 2 * n) m <<= 1;
    for (int attempt = 0; attempt < 7; ++attempt, m <<= 1) {
        std::vector<std::complex<double>> row(m);
        for (std::size_t j = 0; j <= m / 2; ++j) row[j] = gamma(j);
        for (std::size_t j = m / 2 + 1; j < m; ++j) row[j] = row[m - j];
        fft_pow2(row, -1);
        double max_l = 0.0, min_l = 0.0;
        for (const auto& z : row) {
            max_l = std::max(max_l, z.real());
            min_l = std::min(min_l, z.real());
        }
        // Rounding can push exact-zero eigenvalues a hair negative; anything
        // beyond that tolerance means the embedding genuinely fails and we
        // retry with a doubled length.
        if (min_l < -1e-9 * max_l) continue;
        CirculantPlan plan;
        plan.m = m;
        plan.lambda.resize(m);
        for (std::size_t j = 0; j < m; ++j) plan.lambda[j] = std::max(row[j].real(), 0.0);
        return plan;
    }
    throw std::runtime_error("circulant_plan: no nonnegative embedding up to the size cap");
}

// One batch-free path of unit-spacing increments (length n) from the plan.
inline void circulant_increments(const CirculantPlan& plan, std::uint64_t seed,
                                 std::uint64_t stream, std::vector<double>& out_incr) {
    const std::size_t m = plan.m;
    std::vector<std::complex<double>> xi(m);
    const double inv_m = 1.0 / double(m);
    xi[0] = std::sqrt(plan.lambda[0] * inv_m) * normal_draw(seed, stream, 0);
    xi[m / 2] = std::sqrt(plan.lambda[m / 2] * inv_m) * normal_draw(seed, stream, 1);
    for (std::size_t k = 1; k < m / 2; ++k) {
        const double r = std::sqrt(plan.lambda[k] * inv_m * 0.5);
        const double u = normal_draw(seed, stream, 2 * k);
        const double v = normal_draw(seed, stream, 2 * k + 1);
        xi[k] = std::complex<double>(r * u, r * v);
        xi[m - k] = std::conj(xi[k]);
    }
    // Hermitian spectrum => real signal with autocovariance gamma.
    fft_pow2(xi, +1);
    for (std::size_t j = 0; j < out_incr.size(); ++j) out_incr[j] = xi[j].real();
}

} // namespace detail

// Exact sampler through a dense factorization; n capped so the O(n^2) factor
// storage and O(n^3) factorization stay within a sane budget.
inline PathBatch sample_fbm_cholesky(HurstParam hp, const TimeGrid& grid, std::size_t dim,
                                     std::size_t count, std::uint64_t seed,
                                     std::uint64_t first_path = 0) {
    const std::size_t n = grid.n_steps;
    if (n > 4096) throw std::invalid_argument("sample_fbm_cholesky: n_steps capped at 4096");
    const auto L = detail::fbm_cholesky_factor(hp, grid);
    PathBatch out(dim, grid, count, seed, PathKind::fractional);
    std::vector<double> z(n);
    for (std::size_t p = 0; p < count; ++p)
        for (std::size_t c = 0; c < dim; ++c) {
            const std::uint64_t stream = stream_id(first_path + p, c, stream_domain::cholesky);
            for (std::size_t j = 0; j < n; ++j) z[j] = normal_draw(seed, stream, j);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                const double* row = L.data() + i * n;
                for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
                out.at(p, i + 1, c) = acc;
            }
        }
    return out;
}

// Exact sampler via circulant embedding of the stationary increments; the
// synthesized unit-spacing noise is scaled by dt^h and accumulated.
inline PathBatch sample_fbm_circulant(HurstParam hp, const TimeGrid& grid, std::size_t dim,
                                      std::size_t count, std::uint64_t seed,
                                      std::uint64_t first_path = 0) {
    const std::size_t n = grid.n_steps;
    const auto plan = detail::circulant_plan(hp, n);
    const double scale = std::pow(grid.dt(), hp.h);
    PathBatch out(dim, grid, count, seed, PathKind::fractional);
    std::vector<double> incr(n);
    for (std::size_t p = 0; p < count; ++p)
        for (std::size_t c = 0; c < dim; ++c) {
            detail::circulant_increments(plan, seed,
                                         stream_id(first_path + p, c, stream_domain::circulant),
                                         incr);
            for (std::size_t i = 1; i <= n; ++i)
                out.at(p, i, c) = out.at(p, i - 1, c) + scale * incr[i - 1];
        }
    return out;
}

// Volterra transform of explicit Wiener paths with a reusable weight matrix.
inline PathBatch sample_fbm_volterra(const VolterraWeights& vw, const PathBatch& w) {
    if (w.kind != PathKind::wiener)
        throw std::invalid_argument("sample_fbm_volterra: input must be a Wiener batch");
    require_same_grid(vw.grid, w.grid, "sample_fbm_volterra");
    const std::size_t n = vw.grid.n_steps;
    PathBatch out(w.dim, w.grid, w.count, w.seed, PathKind::fractional);
    std::vector<double> dw(n);
    for (std::size_t p = 0; p < w.count; ++p)
        for (std::size_t c = 0; c < w.dim; ++c) {
            for (std::size_t j = 0; j < n; ++j) dw[j] = w.at(p, j + 1, c) - w.at(p, j, c);
            if (vw.h == 0.5) {
                // All-ones rows: running sum, bitwise equal to the MAC loop.
                double acc = 0.0;
                for (std::size_t i = 1; i <= n; ++i) {
                    acc += dw[i - 1];
                    out.at(p, i, c) = acc;
                }
                continue;
            }
            for (std::size_t i = 1; i <= n; ++i) {
                const double* row = vw.w.data() + i * (i - 1) / 2;
                double acc = 0.0;
                for (std::size_t j = 0; j < i; ++j) acc += row[j] * dw[j];
                out.at(p, i, c) = acc;
            }
        }
    return out;
}

inline PathBatch sample_fbm_volterra(HurstParam hp, const TimeGrid& grid, const PathBatch& w) {
    require_same_grid(grid, w.grid, "sample_fbm_volterra");
    return sample_fbm_volterra(volterra_weights(hp, grid), w);
}

} // namespace sfbm
