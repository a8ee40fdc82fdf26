#pragma once
// Shuffle combinatorics for iterated time integrals: enumeration of shuffle
// permutations, simplex quadrature over descending-time chains, numerical
// verification of the product-of-simplices identity and of its partial
// variant (an inner simplex integral hanging off one slot), derivative-order
// ledgers for factor products, and a Monte-Carlo estimator for expected
// simplex integrals of functions of a fractional path.
//
// Conventions: the m-simplex over (theta, t) is the set
// theta < s_m < ... < s_1 < t, and factor lists are in slot order, so
// factors[0] is paired with the LARGEST time variable. Permutations are
// 0-based factor-to-slot maps: perm[i] is the slot receiving factor i, so
// each block keeps its internal order exactly when perm is increasing on it.

#include "sfbm/grid.hpp"
#include "sfbm/path_batch.hpp"
#include "sfbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sfbm {

// ---------------------------------------------------------------------------
// Shuffle permutation enumeration.

struct ShuffleSet {
    std::size_t m = 0, n = 0;
    std::vector<std::vector<std::size_t>> permutations;
};

// All bijections of {0..m+n-1} increasing on the first m entries and on the
// last n entries (slot sets of the two blocks): one per m-subset of slots
// assigned to the first block.
inline ShuffleSet enumerate_shuffles(std::size_t m, std::size_t n) {
    if (m + n > 12) throw std::invalid_argument("enumerate_shuffles: m + n budget is 12");
    ShuffleSet out;
    out.m = m;
    out.n = n;
    const std::size_t total = m + n;
    std::vector<std::size_t> pick(m);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
        std::vector<std::size_t> perm;
        perm.reserve(total);
        perm.insert(perm.end(), pick.begin(), pick.end());
        std::vector<char> used(total, 0);
        for (std::size_t v : pick) used[v] = 1;
        for (std::size_t v = 0; v < total; ++v)
            if (!used[v]) perm.push_back(v);
        out.permutations.push_back(std::move(perm));
        // next lexicographic m-combination of {0..total-1}
        if (m == 0) break;
        std::size_t i = m;
        while (i-- > 0) {
            if (pick[i] != i + total - m) {
                ++pick[i];
                for (std::size_t j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return out;
        }
        if (pick[0] > total - m) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chebyshev running-integral engine (detail): each nesting level is fitted
// on Chebyshev-Lobatto nodes and antidifferentiated in coefficient space,
// which is exact for polynomials and spectrally accurate for smooth factors.

namespace detail {

struct ChebSeries {
    double lo = 0.0, hi = 1.0;
    std::vector<double> coef;  // f(x) = sum_k coef[k] T_k(x), x in [-1,1]

    double eval(double s) const {
        const double x = (2.0 * s - lo - hi) / (hi - lo);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = coef.size(); k-- > 1;) {
            const double t = 2.0 * x * b1 - b2 + coef[k];
            b2 = b1;
            b1 = t;
        }
        return x * b1 - b2 + coef[0];
    }
};

inline constexpr std::size_t cheb_nodes = 129;

inline std::vector<double> cheb_points(double lo, double hi) {
    constexpr double pi = 3.14159265358979323846;
    std::vector<double> s(cheb_nodes);
    for (std::size_t i = 0; i < cheb_nodes; ++i) {
        const double x = std::cos(double(i) * pi / double(cheb_nodes - 1));
        s[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
    }
    return s;
}

inline ChebSeries cheb_fit(double lo, double hi, const std::vector<double>& v) {
    constexpr double pi = 3.14159265358979323846;
    const std::size_t n1 = cheb_nodes - 1;
    ChebSeries out;
    out.lo = lo;
    out.hi = hi;
    out.coef.assign(cheb_nodes, 0.0);
    for (std::size_t k = 0; k < cheb_nodes; ++k) {
        double acc = 0.5 * (v[0] + (k % 2 == 0 ? v[n1] : -v[n1]));
        for (std::size_t i = 1; i < n1; ++i)
            acc += v[i] * std::cos(double(k) * double(i) * pi / double(n1));
        out.coef[k] = 2.0 * acc / double(n1);
    }
    out.coef[0] *= 0.5;
    out.coef[n1] *= 0.5;
    return out;
}

// Antiderivative vanishing at the lower endpoint.
inline ChebSeries cheb_antiderivative(const ChebSeries& f) {
    const std::size_t n = f.coef.size();
    ChebSeries out;
    out.lo = f.lo;
    out.hi = f.hi;
    out.coef.assign(n + 1, 0.0);
    const double scale = 0.5 * (f.hi - f.lo);
    auto a = [&](std::size_t k) { return k < n ? f.coef[k] : 0.0; };
    out.coef[1] = scale * (2.0 * a(0) - a(2)) * 0.5;
    for (std::size_t k = 2; k <= n; ++k)
        out.coef[k] = scale * (a(k - 1) - a(k + 1)) / (2.0 * double(k));
    double at_lo = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
        at_lo += (k % 2 == 0 ? out.coef[k] : -out.coef[k]);
    out.coef[0] = -at_lo;
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Simplex quadrature.

struct SimplexMcEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo simplex integral: average of the factor product over sorted
// uniform times, weighted by the simplex volume. Deterministic in
// (count, seed) via counter-based streams.
inline SimplexMcEstimate simplex_quadrature_mc(
    const std::vector<std::function<double(double)>>& factors, double theta, double t,
    std::size_t count = 200000, std::uint64_t seed = 0x73696d) {
    const std::size_t m = factors.size();
    if (!(theta < t)) throw std::invalid_argument("simplex_quadrature_mc: need theta < t");
    if (count < 2) throw std::invalid_argument("simplex_quadrature_mc: need count >= 2");
    if (m == 0) return {1.0, 0.0};
    double vol = 1.0;
    for (std::size_t j = 1; j <= m; ++j) vol *= (t - theta) / double(j);
    std::vector<double> s(m);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < count; ++q) {
        const std::uint64_t stream = stream_id(q, 255, stream_domain::simplex);
        for (std::size_t j = 0; j < m; ++j)
            s[j] = theta + (t - theta) * uniform_open01(seed, stream, j);
        std::sort(s.begin(), s.end(), std::greater<double>());
        double prod = vol;
        for (std::size_t j = 0; j < m; ++j) prod *= factors[j](s[j]);
        const double delta = prod - mean;
        mean += delta / double(q + 1);
        m2 += delta * (prod - mean);
    }
    SimplexMcEstimate out;
    out.estimate = mean;
    out.std_error = std::sqrt(m2 / double(count - 1) / double(count));
    return out;
}

// Integral over theta < s_m < ... < s_1 < t of prod_j factors[j-1](s_j):
// deterministic nested Chebyshev integration up to six factors, sorted
// uniform Monte Carlo beyond.
inline double simplex_quadrature(const std::vector<std::function<double(double)>>& factors,
                                 double theta, double t) {
    if (!(theta < t)) throw std::invalid_argument("simplex_quadrature: need theta < t");
    const std::size_t m = factors.size();
    if (m == 0) return 1.0;
    if (m > 6) return simplex_quadrature_mc(factors, theta, t).estimate;
    const auto s = detail::cheb_points(theta, t);
    std::vector<double> run(detail::cheb_nodes, 1.0), vals(detail::cheb_nodes);
    for (std::size_t j = m; j-- > 0;) {
        for (std::size_t i = 0; i < detail::cheb_nodes; ++i) vals[i] = factors[j](s[i]) * run[i];
        const auto anti = detail::cheb_antiderivative(detail::cheb_fit(theta, t, vals));
        if (j == 0) return anti.eval(t);
        for (std::size_t i = 0; i < detail::cheb_nodes; ++i) run[i] = anti.eval(s[i]);
    }
    return 1.0;  // unreachable
}

// |product of the two simplex integrals - shuffle-sum| / |product|.
inline double verify_shuffle_identity(const std::vector<std::function<double(double)>>& f,
                                      const std::vector<std::function<double(double)>>& g,
                                      double theta, double t) {
    const std::size_t m = f.size(), n = g.size();
    const double lhs = simplex_quadrature(f, theta, t) * simplex_quadrature(g, theta, t);
    std::vector<std::function<double(double)>> combined = f;
    combined.insert(combined.end(), g.begin(), g.end());
    double rhs = 0.0;
    for (const auto& perm : enumerate_shuffles(m, n).permutations) {
        std::vector<std::function<double(double)>> seq(m + n);
        for (std::size_t i = 0; i < m + n; ++i) seq[perm[i]] = combined[i];
        rhs += simplex_quadrature(seq, theta, t);
    }
    return std::fabs(lhs - rhs) / std::max(std::fabs(lhs), 1e-300);
}

// ---------------------------------------------------------------------------
// Derivative ledgers and the partial shuffle expansion.

// One multi-index per factor; the total is the sum of every entry.
struct DerivativeLedger {
    std::vector<std::vector<unsigned>> orders;

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& mi : orders)
            for (unsigned v : mi) t += v;
        return t;
    }
};

inline std::size_t total_derivative_order(const DerivativeLedger& f_part,
                                          const DerivativeLedger& g_part) {
    return f_part.total() + g_part.total();
}

// Integrand factor paired with the multi-index of derivatives it carries.
struct Factor {
    std::function<double(double)> fn;
    std::vector<unsigned> order;
};

struct ShuffleSequence {
    std::vector<std::size_t> factor_ids;  // combined ids: j < n is f_j, n + i is g_i
    DerivativeLedger ledger;              // multi-indices in slot order
};

struct PartialShuffleExpansion {
    std::size_t n = 0, p = 0, k = 0;
    std::vector<ShuffleSequence> sequences;
};

namespace detail {

// Inductive construction mirroring the identity's proof: k = 0 leaves the
// empty inner simplex (which annihilates unless p = 0), k = 1 pins the
// outermost factor and plain-shuffles the inner block into the remaining
// tail, k >= 2 peels the outermost factor and recurses with k - 1.
inline std::vector<std::vector<std::size_t>> partial_shuffle_ids(std::size_t f_begin,
                                                                 std::size_t n_rem,
                                                                 std::size_t n_total,
                                                                 std::size_t p, std::size_t k) {
    if (k == 0) {
        if (p > 0) return {};
        std::vector<std::size_t> idseq(n_rem);
        std::iota(idseq.begin(), idseq.end(), f_begin);
        return {idseq};
    }
    if (k == 1) {
        const std::size_t tail = n_rem - 1;
        std::vector<std::vector<std::size_t>> out;
        for (const auto& perm : enumerate_shuffles(tail, p).permutations) {
            std::vector<std::size_t> seq(n_rem + p);
            seq[0] = f_begin;
            for (std::size_t i = 0; i < tail + p; ++i)
                seq[1 + perm[i]] = i < tail ? f_begin + 1 + i : n_total + (i - tail);
            out.push_back(std::move(seq));
        }
        return out;
    }
    auto sub = partial_shuffle_ids(f_begin + 1, n_rem - 1, n_total, p, k - 1);
    for (auto& seq : sub) seq.insert(seq.begin(), f_begin);
    return sub;
}

} // namespace detail

// Sequences realizing: the n-simplex integral of f_1..f_n with a p-simplex
// integral of g_1..g_p nested at slot k, rewritten as a sum of flat
// (n+p)-simplex integrals. Every emitted sequence keeps the first k f's in
// the outermost slots and carries the full multiset of factors, so every
// ledger total equals the combined order.
inline PartialShuffleExpansion partial_shuffle_expand(const std::vector<Factor>& f,
                                                      const std::vector<Factor>& g,
                                                      std::size_t k) {
    const std::size_t n = f.size(), p = g.size();
    if (k > n) throw std::invalid_argument("partial_shuffle_expand: need k <= n");
    if (n + p > 12) throw std::invalid_argument("partial_shuffle_expand: n + p budget is 12");
    PartialShuffleExpansion out;
    out.n = n;
    out.p = p;
    out.k = k;
    for (auto& ids : detail::partial_shuffle_ids(0, n, n, p, k)) {
        ShuffleSequence seq;
        seq.ledger.orders.reserve(ids.size());
        for (std::size_t id : ids)
            seq.ledger.orders.push_back(id < n ? f[id].order : g[id - n].order);
        seq.factor_ids = std::move(ids);
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

// Residual of the partial identity: left side evaluated with the inner
// integral as a Chebyshev-built function of its anchor slot, right side as
// the sum over the expansion, relative to the left side.
inline double partial_shuffle_residual(const std::vector<Factor>& f, const std::vector<Factor>& g,
                                       std::size_t k, double theta, double t) {
    const std::size_t n = f.size(), p = g.size();
    if (!(theta < t)) throw std::invalid_argument("partial_shuffle_residual: need theta < t");
    const auto expansion = partial_shuffle_expand(f, g, k);

    double lhs = 0.0;
    if (k == 0 && p > 0) {
        lhs = 0.0;  // inner simplex over (theta, theta) is empty
    } else {
        // G(u) = p-simplex integral of the g block over (theta, u).
        std::function<double(double)> inner = [](double) { return 1.0; };
        if (p > 0) {
            const auto s = detail::cheb_points(theta, t);
            std::vector<double> run(detail::cheb_nodes, 1.0), vals(detail::cheb_nodes);
            detail::ChebSeries anti;
            for (std::size_t j = p; j-- > 0;) {
                for (std::size_t i = 0; i < detail::cheb_nodes; ++i)
                    vals[i] = g[j].fn(s[i]) * run[i];
                anti = detail::cheb_antiderivative(detail::cheb_fit(theta, t, vals));
                for (std::size_t i = 0; i < detail::cheb_nodes; ++i) run[i] = anti.eval(s[i]);
            }
            inner = [anti](double u) { return anti.eval(u); };
        }
        std::vector<std::function<double(double)>> outer(n);
        for (std::size_t j = 0; j < n; ++j) outer[j] = f[j].fn;
        if (n == 0) {
            lhs = 1.0;  // empty outer simplex, k = 0, p = 0
        } else {
            if (k >= 1) {
                const auto fk = f[k - 1].fn;
                outer[k - 1] = [fk, inner](double u) { return fk(u) * inner(u); };
            }
            lhs = simplex_quadrature(outer, theta, t);
        }
    }

    double rhs = 0.0;
    for (const auto& seq : expansion.sequences) {
        std::vector<std::function<double(double)>> fns(seq.factor_ids.size());
        for (std::size_t j = 0; j < seq.factor_ids.size(); ++j) {
            const std::size_t id = seq.factor_ids[j];
            fns[j] = id < n ? f[id].fn : g[id - n].fn;
        }
        rhs += simplex_quadrature(fns, theta, t);
    }
    return std::fabs(lhs - rhs) / std::max(std::fabs(lhs), 1e-300);
}

// ---------------------------------------------------------------------------
// Expected simplex integrals along a fractional path.

// Factor of (time, state) with the state supplied as a d-vector.
using StateFactor = std::function<double(double s, const double* z, std::size_t d)>;

// E int over the m-simplex of prod_j factors[j](s_j, B_{s_j}) ds for a
// d-dimensional fractional path: one sorted-uniform time tuple per sample
// with the path values drawn exactly at those times through the covariance
// Cholesky factor, so the estimator is unbiased with no time grid at all.
// Deterministic factors reproduce the simplex volume with zero error.
inline SimplexMcEstimate mc_simplex_expectation(const std::vector<StateFactor>& factors,
                                                HurstParam hp, std::size_t d, double theta,
                                                double t, std::size_t count,
                                                std::uint64_t seed) {
    const std::size_t m = factors.size();
    if (m == 0 || m > 4)
        throw std::invalid_argument("mc_simplex_expectation: factor count budget is 1..4");
    // component 255 is reserved for the time-tuple uniforms
    if (d < 1 || d > 64) throw std::invalid_argument("mc_simplex_expectation: d budget is 1..64");
    if (!(0.0 <= theta && theta < t))
        throw std::invalid_argument("mc_simplex_expectation: need 0 <= theta < t");
    if (count < 2) throw std::invalid_argument("mc_simplex_expectation: need count >= 2");
    const double twoh = 2.0 * hp.h;
    double vol = 1.0;
    for (std::size_t j = 1; j <= m; ++j) vol *= (t - theta) / double(j);
    std::vector<double> s(m), chol(m * m), z(m * d), gauss(m);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < count; ++q) {
        const std::uint64_t ustream = stream_id(q, 255, stream_domain::simplex);
        for (std::size_t j = 0; j < m; ++j)
            s[j] = theta + (t - theta) * uniform_open01(seed, ustream, j);
        std::sort(s.begin(), s.end(), std::greater<double>());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                chol[i * m + j] = 0.5 * (std::pow(s[i], twoh) + std::pow(s[j], twoh) -
                                         std::pow(std::fabs(s[i] - s[j]), twoh));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double acc = chol[i * m + j];
                for (std::size_t l = 0; l < j; ++l) acc -= chol[i * m + l] * chol[j * m + l];
                if (j == i) {
                    if (!(acc > 0.0))
                        throw std::runtime_error("mc_simplex_expectation: degenerate time tuple");
                    chol[i * m + i] = std::sqrt(acc);
                } else {
                    chol[i * m + j] = acc / chol[j * m + j];
                }
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            const std::uint64_t gstream = stream_id(q, std::uint32_t(c), stream_domain::simplex);
            for (std::size_t j = 0; j < m; ++j) gauss[j] = normal_draw(seed, gstream, j);
            for (std::size_t i = 0; i < m; ++i) {
                double acc = 0.0;
                for (std::size_t l = 0; l <= i; ++l) acc += chol[i * m + l] * gauss[l];
                z[i * d + c] = acc;
            }
        }
        double prod = vol;
        for (std::size_t j = 0; j < m; ++j) prod *= factors[j](s[j], z.data() + j * d, d);
        const double delta = prod - mean;
        mean += delta / double(q + 1);
        m2 += delta * (prod - mean);
    }
    SimplexMcEstimate out;
    out.estimate = mean;
    out.std_error = std::sqrt(m2 / double(count - 1) / double(count));
    return out;
}

} // namespace sfbm
