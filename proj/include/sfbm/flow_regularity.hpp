#pragma once
// Spatial derivatives of the solution map x0 -> X_T^{x0}: the first and
// second variational equations stepped alongside the solved path, a
// truncated Picard series for the Jacobian, and central finite differences
// of the solver under common noise as the independent cross-check. On top
// of these sit Monte-Carlo moment tables for derivative norms and a
// Sobolev-norm estimator over a box of initial conditions.
//
// The variational recursions are the exact derivatives of the explicit
// Euler map (J_{i+1} = (I + dt Db_i) J_i and its differentiated form), so
// finite differences of the solver agree with them to stencil accuracy,
// not just to discretization order.

#include "sfbm/fbm.hpp"
#include "sfbm/girsanov.hpp"
#include "sfbm/grid.hpp"
#include "sfbm/path_batch.hpp"
#include "sfbm/skew_sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfbm {

// Per-path Jacobian d X_i / d x0 along a batch of solution paths, stored
// row-major per node: at(p, i, a, b) = d X_a / d x0_b at node i.
struct JacobianPath {
    TimeGrid grid;
    std::size_t dim = 1;
    std::size_t count = 1;
    std::vector<double> data;

    JacobianPath() = default;
    JacobianPath(const TimeGrid& grid_, std::size_t dim_, std::size_t count_)
        : grid(grid_), dim(dim_), count(count_) {
        data.assign(count * grid.n_nodes() * dim * dim, 0.0);
    }

    double& at(std::size_t p, std::size_t i, std::size_t a, std::size_t b) {
        return data[((p * grid.n_nodes() + i) * dim + a) * dim + b];
    }
    double at(std::size_t p, std::size_t i, std::size_t a, std::size_t b) const {
        return data[((p * grid.n_nodes() + i) * dim + a) * dim + b];
    }
};

// Per-path second derivative d^2 X_i / d x0^2, symmetric in its two lower
// indices: at(p, i, a, b, c) = d^2 X_a / d x0_b d x0_c at node i.
struct SecondVariationPath {
    TimeGrid grid;
    std::size_t dim = 1;
    std::size_t count = 1;
    std::vector<double> data;

    SecondVariationPath() = default;
    SecondVariationPath(const TimeGrid& grid_, std::size_t dim_, std::size_t count_)
        : grid(grid_), dim(dim_), count(count_) {
        data.assign(count * grid.n_nodes() * dim * dim * dim, 0.0);
    }

    double& at(std::size_t p, std::size_t i, std::size_t a, std::size_t b, std::size_t c) {
        return data[(((p * grid.n_nodes() + i) * dim + a) * dim + b) * dim + c];
    }
    double at(std::size_t p, std::size_t i, std::size_t a, std::size_t b, std::size_t c) const {
        return data[(((p * grid.n_nodes() + i) * dim + a) * dim + b) * dim + c];
    }
};

// Monte-Carlo estimate of one derivative tensor of the flow at a point,
// flattened row-major (rank 2: value[a*d+b]; rank 3: value[(a*d+b)*d+c]),
// with a matching per-entry standard error. cancellation_warning is set by
// the finite-difference estimator when the stencil spread falls into
// rounding noise.
struct FlowDerivativeEstimate {
    std::size_t order = 1;
    std::string method;
    std::vector<double> x;
    double t = 0.0;
    std::vector<double> value;
    std::vector<double> std_error;
    bool cancellation_warning = false;
};

// First variational equation dJ = Db(X) J dt, J_0 = I, stepped with the
// same explicit Euler rule as the solver so J is the exact derivative of
// the discrete solution map.
inline JacobianPath variational_jacobian(const DriftSpec& b, const PathBatch& x) {
    if (!b.jacobian)
        throw std::invalid_argument("variational_jacobian: drift needs an analytic jacobian");
    if (x.kind != PathKind::solution)
        throw std::invalid_argument("variational_jacobian: expects solved paths");
    const std::size_t d = x.dim;
    const std::size_t n = x.grid.n_steps;
    const double dt = x.grid.dt();
    JacobianPath jp(x.grid, d, x.count);
    std::vector<double> db(d * d);
    for (std::size_t p = 0; p < x.count; ++p) {
        for (std::size_t a = 0; a < d; ++a) jp.at(p, 0, a, a) = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            b.jacobian(x.grid.node(i), x.path_data(p) + i * d, d, db.data());
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t c = 0; c < d; ++c) {
                    double acc = jp.at(p, i, a, c);
                    for (std::size_t q = 0; q < d; ++q)
                        acc += dt * db[a * d + q] * jp.at(p, i, q, c);
                    jp.at(p, i + 1, a, c) = acc;
                }
        }
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t c = 0; c < d; ++c)
                if (!std::isfinite(jp.at(p, n, a, c)))
                    throw std::runtime_error("variational_jacobian: non-finite jacobian");
    }
    return jp;
}

// Truncated Picard series J ~ I + sum_{m<=M} S_m with each level the
// left-point running integral of Db(X) times the previous level. With the
// left-point rule the partial sums telescope into the Euler product, so at
// M >= n_steps this reproduces variational_jacobian to rounding.
inline JacobianPath picard_jacobian(const DriftSpec& b, const PathBatch& x,
                                    std::size_t m_trunc) {
    if (m_trunc < 1) throw std::invalid_argument("picard_jacobian: need truncation >= 1");
    if (!b.jacobian)
        throw std::invalid_argument("picard_jacobian: drift needs an analytic jacobian");
    if (x.kind != PathKind::solution)
        throw std::invalid_argument("picard_jacobian: expects solved paths");
    const std::size_t d = x.dim;
    const std::size_t n = x.grid.n_steps;
    const std::size_t nn = x.grid.n_nodes();
    const double dt = x.grid.dt();
    JacobianPath jp(x.grid, d, x.count);
    std::vector<double> db(n * d * d), prev(nn * d * d), cur(nn * d * d), acc(nn * d * d);
    for (std::size_t p = 0; p < x.count; ++p) {
        for (std::size_t i = 0; i < n; ++i)
            b.jacobian(x.grid.node(i), x.path_data(p) + i * d, d, db.data() + i * d * d);
        std::fill(acc.begin(), acc.end(), 0.0);
        std::fill(prev.begin(), prev.end(), 0.0);
        for (std::size_t i = 0; i < nn; ++i)
            for (std::size_t a = 0; a < d; ++a) {
                acc[(i * d + a) * d + a] = 1.0;
                prev[(i * d + a) * d + a] = 1.0;
            }
        for (std::size_t m = 1; m <= m_trunc; ++m) {
            std::fill(cur.begin(), cur.begin() + d * d, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double* dbi = db.data() + i * d * d;
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t c = 0; c < d; ++c) {
                        double s = cur[(i * d + a) * d + c];
                        for (std::size_t q = 0; q < d; ++q)
                            s += dt * dbi[a * d + q] * prev[(i * d + q) * d + c];
                        cur[((i + 1) * d + a) * d + c] = s;
                    }
            }
            for (std::size_t j = 0; j < nn * d * d; ++j) acc[j] += cur[j];
            std::swap(prev, cur);
        }
        for (std::size_t i = 0; i < nn; ++i)
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t c = 0; c < d; ++c)
                    jp.at(p, i, a, c) = acc[(i * d + a) * d + c];
    }
    return jp;
}

// Second variational equation dK = (D2b(X)[J, J] + Db(X) K) dt, K_0 = 0,
// the exact second derivative of the discrete solution map.
inline SecondVariationPath second_variation(const DriftSpec& b, const PathBatch& x,
                                            const JacobianPath& jac) {
    if (!b.jacobian || !b.hessian)
        throw std::invalid_argument("second_variation: drift needs analytic jacobian and hessian");
    if (x.kind != PathKind::solution)
        throw std::invalid_argument("second_variation: expects solved paths");
    require_same_grid(x.grid, jac.grid, "second_variation");
    if (jac.dim != x.dim || jac.count != x.count)
        throw std::invalid_argument("second_variation: jacobian shape mismatch");
    const std::size_t d = x.dim;
    const std::size_t n = x.grid.n_steps;
    const double dt = x.grid.dt();
    SecondVariationPath sv(x.grid, d, x.count);
    std::vector<double> db(d * d), h2(d * d * d);
    for (std::size_t p = 0; p < x.count; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x.path_data(p) + i * d;
            b.jacobian(x.grid.node(i), xi, d, db.data());
            b.hessian(x.grid.node(i), xi, d, h2.data());
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t r = 0; r < d; ++r)
                    for (std::size_t c = 0; c < d; ++c) {
                        double acc = sv.at(p, i, a, r, c);
                        double quad = 0.0;
                        for (std::size_t u = 0; u < d; ++u)
                            for (std::size_t v = 0; v < d; ++v)
                                quad += h2[(a * d + u) * d + v] * jac.at(p, i, u, r) *
                                        jac.at(p, i, v, c);
                        double lin = 0.0;
                        for (std::size_t u = 0; u < d; ++u)
                            lin += db[a * d + u] * sv.at(p, i, u, r, c);
                        sv.at(p, i + 1, a, r, c) = acc + dt * (quad + lin);
                    }
        }
        for (std::size_t a = 0; a < d; ++a)
            if (!std::isfinite(sv.at(p, n, a, 0, 0)))
                throw std::runtime_error("second_variation: non-finite tensor");
    }
    return sv;
}

// Map from an initial point to the flattened (path, component) terminal
// values under fixed noise; the finite-difference estimator differentiates
// any such handle under common random numbers.
using FlowSolver =
    std::function<std::vector<double>(const std::vector<double>& x0, const PathBatch& noise)>;

inline FlowSolver make_euler_flow(const DriftSpec& b) {
    return [b](const std::vector<double>& x0, const PathBatch& noise) {
        PathBatch sol = euler_solve(b, x0, noise);
        const std::size_t n = noise.grid.n_steps;
        std::vector<double> term(noise.count * noise.dim);
        for (std::size_t p = 0; p < noise.count; ++p)
            for (std::size_t c = 0; c < noise.dim; ++c)
                term[p * noise.dim + c] = sol.at(p, n, c);
        return term;
    };
}

// Central finite differences of a flow handle at x under common noise:
// order 1 uses the two-point stencil per axis, order 2 the three-point
// diagonal and four-point mixed stencils. Standard errors come from the
// path sample of per-path stencil derivatives. If the average stencil
// spread falls below 1e3 machine epsilons of the state scale the result is
// flagged as cancellation-limited.
inline FlowDerivativeEstimate finite_diff_flow(const FlowSolver& flow,
                                               const std::vector<double>& x, double step,
                                               std::size_t order, const PathBatch& noise) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("finite_diff_flow: order must be 1 or 2");
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_flow: need step > 0");
    if (x.size() != noise.dim)
        throw std::invalid_argument("finite_diff_flow: point dimension mismatch");
    const std::size_t d = noise.dim;
    const std::size_t count = noise.count;
    std::vector<std::vector<double>> stencil;
    auto solve_shift = [&](std::ptrdiff_t i, std::ptrdiff_t j, double hi, double hj) {
        std::vector<double> pt = x;
        if (i >= 0) pt[std::size_t(i)] += hi;
        if (j >= 0) pt[std::size_t(j)] += hj;
        stencil.push_back(flow(pt, noise));
        if (stencil.back().size() != count * d)
            throw std::invalid_argument("finite_diff_flow: flow handle returned a bad shape");
        return stencil.size() - 1;
    };

    const std::size_t entries = (order == 1) ? d * d : d * d * d;
    FlowDerivativeEstimate out;
    out.order = order;
    out.method = "finite-diff";
    out.x = x;
    out.t = noise.grid.t_end;
    out.value.assign(entries, 0.0);
    out.std_error.assign(entries, 0.0);

    // welford[e] accumulates the per-path derivative for entry e.
    std::vector<double> mean(entries, 0.0), m2(entries, 0.0);
    auto accumulate = [&](const std::vector<std::vector<double>>& per_entry_terms) {
        for (std::size_t p = 0; p < count; ++p)
            for (std::size_t e = 0; e < entries; ++e) {
                const double v = per_entry_terms[e][p];
                const double delta = v - mean[e];
                mean[e] += delta / double(p + 1);
                m2[e] += delta * (v - mean[e]);
            }
    };

    std::vector<std::vector<double>> terms(entries, std::vector<double>(count, 0.0));
    if (order == 1) {
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t ip = solve_shift(std::ptrdiff_t(j), -1, step, 0.0);
            const std::size_t im = solve_shift(std::ptrdiff_t(j), -1, -step, 0.0);
            for (std::size_t p = 0; p < count; ++p)
                for (std::size_t a = 0; a < d; ++a)
                    terms[a * d + j][p] =
                        (stencil[ip][p * d + a] - stencil[im][p * d + a]) / (2.0 * step);
        }
    } else {
        const std::size_t base = solve_shift(-1, -1, 0.0, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t ip = solve_shift(std::ptrdiff_t(j), -1, step, 0.0);
            const std::size_t im = solve_shift(std::ptrdiff_t(j), -1, -step, 0.0);
            for (std::size_t p = 0; p < count; ++p)
                for (std::size_t a = 0; a < d; ++a)
                    terms[(a * d + j) * d + j][p] =
                        (stencil[ip][p * d + a] - 2.0 * stencil[base][p * d + a] +
                         stencil[im][p * d + a]) /
                        (step * step);
        }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) {
                const std::size_t pp = solve_shift(std::ptrdiff_t(i), std::ptrdiff_t(j), step, step);
                const std::size_t pm =
                    solve_shift(std::ptrdiff_t(i), std::ptrdiff_t(j), step, -step);
                const std::size_t mp =
                    solve_shift(std::ptrdiff_t(i), std::ptrdiff_t(j), -step, step);
                const std::size_t mm =
                    solve_shift(std::ptrdiff_t(i), std::ptrdiff_t(j), -step, -step);
                for (std::size_t p = 0; p < count; ++p)
                    for (std::size_t a = 0; a < d; ++a) {
                        const double mixed = (stencil[pp][p * d + a] - stencil[pm][p * d + a] -
                                              stencil[mp][p * d + a] + stencil[mm][p * d + a]) /
                                             (4.0 * step * step);
                        terms[(a * d + i) * d + j][p] = mixed;
                        terms[(a * d + j) * d + i][p] = mixed;
                    }
            }
    }
    accumulate(terms);
    for (std::size_t e = 0; e < entries; ++e) {
        out.value[e] = mean[e];
        out.std_error[e] =
            count > 1 ? std::sqrt(m2[e] / double(count - 1) / double(count)) : 0.0;
        if (!std::isfinite(out.value[e]))
            throw std::runtime_error("finite_diff_flow: non-finite derivative");
    }

    // Cancellation scan: average spread of the stencil values against the
    // average state magnitude.
    double spread = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < count; ++p)
        for (std::size_t a = 0; a < d; ++a) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto& s : stencil) {
                lo = std::min(lo, s[p * d + a]);
                hi = std::max(hi, s[p * d + a]);
            }
            spread += hi - lo;
            scale += std::fabs(stencil[0][p * d + a]);
        }
    out.cancellation_warning =
        spread < 1e3 * std::numeric_limits<double>::epsilon() * scale;
    return out;
}

namespace detail {

inline double frobenius_pow(const double* v, std::size_t len, double p) {
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) s += v[j] * v[j];
    return std::pow(s, 0.5 * p);
}

} // namespace detail

// L1 mass of the mollified occupation drift vector: |alpha| sqrt(d) for
// every width index, the quantity the derivative-moment bounds are phrased
// in.
inline double drift_l1_mass(const SkewConfig& cfg) {
    return std::fabs(cfg.alpha) * std::sqrt(double(cfg.dim));
}

struct MomentRow {
    std::size_t n_moll = 1;
    std::vector<double> x;
    double estimate = 0.0;
    double std_error = 0.0;
};

// One row per (width index, start point); sup_proxy[j] is the max estimate
// over the start grid at n_values[j].
struct MomentTable {
    std::size_t k = 1;
    double p = 2.0;
    std::vector<std::size_t> n_values;
    std::vector<MomentRow> rows;
    std::vector<double> sup_proxy;
};

// Monte-Carlo table of E ||d^k X_T^{n,x}||_F^p over a grid of width indices
// and start points, common noise across all cells. The Frobenius norm keeps
// the k=1, alpha=0 rows exactly one in dimension one.
inline MomentTable moment_table(const SkewConfig& base, const std::vector<std::size_t>& n_values,
                                double p, std::size_t k,
                                const std::vector<std::vector<double>>& x_grid,
                                std::size_t count, std::uint64_t seed) {
    if (k != 1 && k != 2) throw std::invalid_argument("moment_table: order must be 1 or 2");
    if (!(p >= 1.0)) throw std::invalid_argument("moment_table: need p >= 1");
    if (n_values.empty() || x_grid.empty())
        throw std::invalid_argument("moment_table: empty width or start grid");
    for (const auto& x : x_grid)
        if (x.size() != base.dim)
            throw std::invalid_argument("moment_table: start point dimension mismatch");
    const std::size_t d = base.dim;
    PathBatch noise = sample_fbm_circulant(base.h, base.grid, d, count, seed);
    MomentTable table;
    table.k = k;
    table.p = p;
    table.n_values = n_values;
    const std::size_t n = base.grid.n_steps;
    for (std::size_t nm : n_values) {
        double best = 0.0;
        for (const auto& x : x_grid) {
            SkewConfig cfg = base;
            cfg.n_moll = nm;
            cfg.x0 = x;
            const DriftSpec b = skew_mollified_drift(cfg);
            PathBatch sol = euler_solve(b, cfg.x0, noise);
            JacobianPath jac = variational_jacobian(b, sol);
            SecondVariationPath sv;
            if (k == 2) sv = second_variation(b, sol, jac);
            double mean = 0.0, m2 = 0.0;
            std::vector<double> flat(k == 1 ? d * d : d * d * d);
            for (std::size_t q = 0; q < count; ++q) {
                if (k == 1) {
                    for (std::size_t a = 0; a < d; ++a)
                        for (std::size_t c = 0; c < d; ++c) flat[a * d + c] = jac.at(q, n, a, c);
                } else {
                    for (std::size_t a = 0; a < d; ++a)
                        for (std::size_t r = 0; r < d; ++r)
                            for (std::size_t c = 0; c < d; ++c)
                                flat[(a * d + r) * d + c] = sv.at(q, n, a, r, c);
                }
                const double v = detail::frobenius_pow(flat.data(), flat.size(), p);
                const double delta = v - mean;
                mean += delta / double(q + 1);
                m2 += delta * (v - mean);
            }
            MomentRow row;
            row.n_moll = nm;
            row.x = x;
            row.estimate = mean;
            row.std_error =
                count > 1 ? std::sqrt(m2 / double(count - 1) / double(count)) : 0.0;
            best = std::max(best, mean);
            table.rows.push_back(std::move(row));
        }
        table.sup_proxy.push_back(best);
    }
    return table;
}

// Axis-aligned box with an odd number (>= 3) of uniformly spaced quadrature
// nodes per axis, closed at both faces.
struct BoxDomain {
    std::vector<double> lo, hi;
    std::vector<std::size_t> nodes;
};

// Terminal flow data at one box node under common noise: per-path terminal
// states flattened (path, component), and flattened derivative tensors when
// requested.
struct FlowNodeSamples {
    std::vector<double> x;
    std::vector<double> terminal;
    std::vector<double> jacobian;
    std::vector<double> second;
};

struct SobolevEstimate {
    BoxDomain domain;
    std::size_t k = 1;
    double p = 2.0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t node_count = 0;
};

namespace detail {

inline void check_box(const BoxDomain& box, const char* who) {
    const std::size_t d = box.lo.size();
    if (d == 0 || box.hi.size() != d || box.nodes.size() != d)
        throw std::invalid_argument(std::string(who) + ": inconsistent box");
    for (std::size_t i = 0; i < d; ++i) {
        if (!(box.hi[i] > box.lo[i]))
            throw std::invalid_argument(std::string(who) + ": need hi > lo per axis");
        if (box.nodes[i] < 3 || box.nodes[i] % 2 == 0)
            throw std::invalid_argument(std::string(who) + ": node counts must be odd and >= 3");
    }
}

inline std::size_t box_total(const BoxDomain& box) {
    std::size_t total = 1;
    for (std::size_t m : box.nodes) total *= m;
    return total;
}

// Lexicographic node g (last axis fastest) -> coordinates.
inline std::vector<double> box_node(const BoxDomain& box, std::size_t g) {
    const std::size_t d = box.lo.size();
    std::vector<double> x(d);
    for (std::size_t i = d; i-- > 0;) {
        const std::size_t m = box.nodes[i];
        const std::size_t idx = g % m;
        g /= m;
        x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * double(idx) / double(m - 1);
    }
    return x;
}

// Tensorized composite Simpson weight of node g.
inline double box_weight(const BoxDomain& box, std::size_t g) {
    const std::size_t d = box.lo.size();
    double w = 1.0;
    for (std::size_t i = d; i-- > 0;) {
        const std::size_t m = box.nodes[i];
        const std::size_t idx = g % m;
        g /= m;
        const double h = (box.hi[i] - box.lo[i]) / double(m - 1);
        double c = (idx == 0 || idx == m - 1) ? 1.0 : (idx % 2 == 1 ? 4.0 : 2.0);
        w *= c * h / 3.0;
    }
    return w;
}

} // namespace detail

// Solve the flow at every box node under the given common noise and record
// terminal states plus derivative tensors up to order k.
inline std::vector<FlowNodeSamples> sample_flow_on_box(const DriftSpec& b, const BoxDomain& box,
                                                       std::size_t k, const PathBatch& noise) {
    detail::check_box(box, "sample_flow_on_box");
    if (k > 2) throw std::invalid_argument("sample_flow_on_box: order capped at 2");
    if (box.lo.size() != noise.dim)
        throw std::invalid_argument("sample_flow_on_box: box and noise dimension differ");
    const std::size_t d = noise.dim;
    const std::size_t n = noise.grid.n_steps;
    const std::size_t count = noise.count;
    const std::size_t total = detail::box_total(box);
    std::vector<FlowNodeSamples> out(total);
    for (std::size_t g = 0; g < total; ++g) {
        FlowNodeSamples& node = out[g];
        node.x = detail::box_node(box, g);
        PathBatch sol = euler_solve(b, node.x, noise);
        node.terminal.resize(count * d);
        for (std::size_t p = 0; p < count; ++p)
            for (std::size_t c = 0; c < d; ++c) node.terminal[p * d + c] = sol.at(p, n, c);
        if (k >= 1) {
            JacobianPath jac = variational_jacobian(b, sol);
            node.jacobian.resize(count * d * d);
            for (std::size_t p = 0; p < count; ++p)
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t c = 0; c < d; ++c)
                        node.jacobian[(p * d + a) * d + c] = jac.at(p, n, a, c);
            if (k == 2) {
                SecondVariationPath sv = second_variation(b, sol, jac);
                node.second.resize(count * d * d * d);
                for (std::size_t p = 0; p < count; ++p)
                    for (std::size_t a = 0; a < d; ++a)
                        for (std::size_t r = 0; r < d; ++r)
                            for (std::size_t c = 0; c < d; ++c)
                                node.second[((p * d + a) * d + r) * d + c] =
                                    sv.at(p, n, a, r, c);
            }
        }
    }
    return out;
}

// Path-average of ( sum_{orders <= k} int_box ||D^i X_T(x)||^p dx )^{2/p},
// the square of the Sobolev norm of the sampled flow map, by tensorized
// composite Simpson quadrature over the node data.
inline SobolevEstimate sobolev_norm_estimate(const BoxDomain& box,
                                             const std::vector<FlowNodeSamples>& nodes,
                                             std::size_t k, double p) {
    detail::check_box(box, "sobolev_norm_estimate");
    if (!(p >= 2.0)) throw std::invalid_argument("sobolev_norm_estimate: need p >= 2");
    if (k > 2) throw std::invalid_argument("sobolev_norm_estimate: order capped at 2");
    const std::size_t total = detail::box_total(box);
    if (nodes.size() != total)
        throw std::invalid_argument("sobolev_norm_estimate: node data does not tile the box");
    const std::size_t d = box.lo.size();
    if (nodes[0].terminal.empty() || nodes[0].terminal.size() % d != 0)
        throw std::invalid_argument("sobolev_norm_estimate: missing terminal samples");
    const std::size_t count = nodes[0].terminal.size() / d;
    for (const auto& node : nodes) {
        if (node.terminal.size() != count * d)
            throw std::invalid_argument("sobolev_norm_estimate: ragged terminal samples");
        if (k >= 1 && node.jacobian.size() != count * d * d)
            throw std::invalid_argument("sobolev_norm_estimate: missing order-1 derivatives");
        if (k >= 2 && node.second.size() != count * d * d * d)
            throw std::invalid_argument("sobolev_norm_estimate: missing order-2 derivatives");
    }
    std::vector<double> weights(total);
    for (std::size_t g = 0; g < total; ++g) weights[g] = detail::box_weight(box, g);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < count; ++q) {
        double acc = 0.0;
        for (std::size_t g = 0; g < total; ++g) {
            const FlowNodeSamples& node = nodes[g];
            double cell = detail::frobenius_pow(node.terminal.data() + q * d, d, p);
            if (k >= 1)
                cell += detail::frobenius_pow(node.jacobian.data() + q * d * d, d * d, p);
            if (k >= 2)
                cell += detail::frobenius_pow(node.second.data() + q * d * d * d, d * d * d, p);
            acc += weights[g] * cell;
        }
        const double v = std::pow(acc, 2.0 / p);
        const double delta = v - mean;
        mean += delta / double(q + 1);
        m2 += delta * (v - mean);
    }
    SobolevEstimate out;
    out.domain = box;
    out.k = k;
    out.p = p;
    out.estimate = mean;
    out.std_error = count > 1 ? std::sqrt(m2 / double(count - 1) / double(count)) : 0.0;
    out.node_count = total;
    return out;
}

} // namespace sfbm
