#pragma once
// Euler scheme for the mollified occupation-drift SDE
//   X_t = x0 + alpha int_0^t phi_eps(X_u) du * 1_d + B_t^H,  eps = 1/n_moll,
// plus the mollified local-time estimator used to study the limit.

#include "sfbm/girsanov.hpp"
#include "sfbm/grid.hpp"
#include "sfbm/path_batch.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfbm {

// Gaussian density with covariance eps * Identity at the point y.
inline double mollifier(const std::vector<double>& y, double eps, std::size_t d) {
    if (!(eps > 0.0)) throw std::domain_error("mollifier: need eps > 0");
    if (y.size() != d) throw std::invalid_argument("mollifier: point must have dim d");
    double r2 = 0.0;
    for (double v : y) r2 += v * v;
    return detail::gaussian_kernel(r2, eps, d);
}

struct SkewConfig {
    double alpha = 0.0;
    std::vector<double> x0;
    HurstParam h;
    TimeGrid grid;
    std::size_t n_moll = 1;  // mollifier width eps = 1 / n_moll
    std::size_t dim = 1;

    // Strong existence for the limiting equation is established below this
    // threshold; the solver itself runs for any h.
    bool in_existence_regime() const { return h.h < 1.0 / (2.0 * double(dim) + 4.0); }
};

// Explicit Euler: X_{i+1} = X_i + b(t_i, X_i) dt + (B_{i+1} - B_i), per path.
inline PathBatch euler_solve(const DriftSpec& b, const std::vector<double>& x0,
                             const PathBatch& noise) {
    if (noise.kind == PathKind::solution)
        throw std::invalid_argument("euler_solve: noise batch already holds solutions");
    if (x0.size() != noise.dim)
        throw std::invalid_argument("euler_solve: x0 must have the noise dimension");
    if (!b.evaluator) throw std::invalid_argument("euler_solve: drift evaluator not set");
    const std::size_t d = noise.dim, n = noise.grid.n_steps;
    const double dt = noise.grid.dt();
    PathBatch out(d, noise.grid, noise.count, noise.seed, PathKind::solution);
    std::vector<double> drift(d);
    for (std::size_t p = 0; p < noise.count; ++p) {
        for (std::size_t c = 0; c < d; ++c) out.at(p, 0, c) = x0[c];
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = &out.at(p, i, 0);
            b.evaluator(noise.grid.node(i), xi, d, drift.data());
            for (std::size_t c = 0; c < d; ++c) {
                const double next =
                    xi[c] + drift[c] * dt + (noise.at(p, i + 1, c) - noise.at(p, i, c));
                if (!std::isfinite(next))
                    throw std::runtime_error("euler_solve: non-finite state at step " +
                                             std::to_string(i + 1));
                out.at(p, i + 1, c) = next;
            }
        }
    }
    return out;
}

// Drift alpha * phi_{1/n_moll}(y) * 1_d of the mollified equation.
inline DriftSpec skew_mollified_drift(const SkewConfig& cfg) {
    const double eps = 1.0 / double(cfg.n_moll);
    const double alpha = cfg.alpha;
    DriftSpec b;
    b.evaluator = [alpha, eps](double, const double* x, std::size_t dim, double* out) {
        double r2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) r2 += x[c] * x[c];
        const double v = alpha * detail::gaussian_kernel(r2, eps, dim);
        for (std::size_t c = 0; c < dim; ++c) out[c] = v;
    };
    // d/dx_p of alpha*phi_eps is -x_p/eps times the value, identical rows.
    b.jacobian = [alpha, eps](double, const double* x, std::size_t dim, double* out) {
        double r2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) r2 += x[c] * x[c];
        const double v = alpha * detail::gaussian_kernel(r2, eps, dim);
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t p = 0; p < dim; ++p) out[a * dim + p] = -x[p] / eps * v;
    };
    b.hessian = [alpha, eps](double, const double* x, std::size_t dim, double* out) {
        double r2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) r2 += x[c] * x[c];
        const double v = alpha * detail::gaussian_kernel(r2, eps, dim);
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t p = 0; p < dim; ++p)
                for (std::size_t q = 0; q < dim; ++q)
                    out[(a * dim + p) * dim + q] =
                        (x[p] * x[q] / (eps * eps) - (p == q ? 1.0 / eps : 0.0)) * v;
    };
    b.tag = "occupation drift, eps = 1/" + std::to_string(cfg.n_moll);
    b.analytic_rate = true;
    return b;
}

inline PathBatch solve_skew_mollified(const SkewConfig& cfg, const PathBatch& noise) {
    if (cfg.n_moll < 1) throw std::invalid_argument("solve_skew_mollified: need n_moll >= 1");
    if (cfg.dim != noise.dim)
        throw std::invalid_argument("solve_skew_mollified: config and noise dimension differ");
    require_same_grid(cfg.grid, noise.grid, "solve_skew_mollified");
    return euler_solve(skew_mollified_drift(cfg), cfg.x0, noise);
}

// Occupation integrals int phi_eps(X_s - level) ds over the node range
// [i_begin, i_end], one value per (eps, path). The widths must be positive
// and strictly decreasing; the caller inspects stabilization across them.
inline std::vector<std::vector<double>> local_time(const PathBatch& x,
                                                   const std::vector<double>& level,
                                                   const std::vector<double>& eps_schedule,
                                                   std::size_t i_begin = 0,
                                                   std::size_t i_end = SIZE_MAX) {
    if (eps_schedule.empty()) throw std::invalid_argument("local_time: empty eps schedule");
    for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
        if (!(eps_schedule[j] > 0.0))
            throw std::invalid_argument("local_time: widths must be positive");
        if (j > 0 && !(eps_schedule[j] < eps_schedule[j - 1]))
            throw std::invalid_argument("local_time: widths must be strictly decreasing");
    }
    if (level.size() != x.dim)
        throw std::invalid_argument("local_time: level must have the path dimension");
    if (i_end == SIZE_MAX) i_end = x.grid.n_steps;
    if (!(i_begin < i_end) || i_end > x.grid.n_steps)
        throw std::invalid_argument("local_time: bad node range");
    const double dt = x.grid.dt();
    const std::size_t ne = eps_schedule.size();
    std::vector<std::vector<double>> out(ne, std::vector<double>(x.count, 0.0));
    std::vector<double> acc(ne);
    for (std::size_t p = 0; p < x.count; ++p) {
        for (double& a : acc) a = 0.0;
        for (std::size_t i = i_begin; i <= i_end; ++i) {
            double r2 = 0.0;
            for (std::size_t c = 0; c < x.dim; ++c) {
                const double diff = x.at(p, i, c) - level[c];
                r2 += diff * diff;
            }
            const double w = (i == i_begin || i == i_end) ? 0.5 : 1.0;
            for (std::size_t e = 0; e < ne; ++e)
                acc[e] += w * detail::gaussian_kernel(r2, eps_schedule[e], x.dim);
        }
        for (std::size_t e = 0; e < ne; ++e) out[e][p] = acc[e] * dt;
    }
    return out;
}

} // namespace sfbm
