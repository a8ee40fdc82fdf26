#pragma once
// Deterministic quadrature: adaptive Gauss-Kronrod (G7,K15) for smooth
// integrands, tanh-sinh for integrable endpoint singularities, and a
// Chebyshev running integral (values of the antiderivative at Chebyshev
// nodes) used by the iterated-integral recursions.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sfbm {

namespace detail {

// Kronrod-15 abscissae on [0,1] side and weights; Gauss-7 weights on the
// embedded nodes (QUADPACK dqk15 constants).
inline constexpr std::array<double, 8> gk_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(const F& f, double a, double b, double& result, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int j = 0; j < 8; ++j) {
        const double dx = h * gk_x[std::size_t(j)];
        const double fv = (j == 7) ? f(c) : f(c - dx) + f(c + dx);
        resk += gk_wk[std::size_t(j)] * fv;
        if (j % 2 == 1) resg += gk_wg[std::size_t(j / 2)] * fv;
    }
    result = resk * h;
    err = std::fabs((resk - resg) * h);
}

} // namespace detail

// Adaptive bisection on top of (G7,K15). Throws on non-convergence.
template <class F>
inline double integrate_adaptive(const F& f, double a, double b,
                                 double rel_tol = 1e-10, double abs_tol = 1e-14,
                                 int max_depth = 48) {
    if (a == b) return 0.0;
    struct Seg { double a, b, val, err; int depth; };
    double val, err;
    detail::gk15(f, a, b, val, err);
    std::vector<Seg> stack{{a, b, val, err, 0}};
    double total = 0.0, total_err = 0.0;
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        const double tol = abs_tol + rel_tol * std::fabs(s.val);
        if (s.err <= tol || s.depth >= max_depth) {
            if (s.depth >= max_depth && s.err > 1e3 * tol)
                throw std::runtime_error("integrate_adaptive: no convergence");
            total += s.val;
            total_err += s.err;
            continue;
        }
        const double m = 0.5 * (s.a + s.b);
        Seg l{s.a, m, 0, 0, s.depth + 1}, r{m, s.b, 0, 0, s.depth + 1};
        detail::gk15(f, l.a, l.b, l.val, l.err);
        detail::gk15(f, r.a, r.b, r.val, r.err);
        stack.push_back(l);
        stack.push_back(r);
    }
    (void)total_err;
    return total;
}

// tanh-sinh rule; admits algebraic singularities at either endpoint. The
// distance to the endpoint is carried directly (never as b minus a large
// tanh), so singular tails are sampled down to the underflow limit.
template <class F>
inline double integrate_tanh_sinh(const F& f, double a, double b, double tol = 1e-12) {
    if (a == b) return 0.0;
    const double h0 = 0.5 * (b - a);
    const double pi_half = 1.5707963267948966;
    const double tmax = 6.0;
    auto node_sum = [&](double step, bool odd_only) {
        double s = 0.0;
        for (double t = odd_only ? step : 0.0; t <= tmax; t += odd_only ? 2.0 * step : step) {
            const double u = pi_half * std::sinh(t);
            const double emu = std::exp(-2.0 * u);
            const double delta = h0 * 2.0 * emu / (1.0 + emu);     // distance to the endpoint
            const double w = pi_half * std::cosh(t) * 4.0 * emu / ((1.0 + emu) * (1.0 + emu));
            if (delta <= 0.0) break;
            const double xa = a + delta, xb = b - delta;
            double fv = 0.0;
            if (xa > a && xa < b) fv += f(xa);
            if (t > 0.0 && xb > a && xb < b) fv += f(xb);
            s += w * fv;
        }
        return s;
    };
    double step = 1.0;
    double sum = node_sum(step, false);
    double prev = h0 * step * sum;
    for (int level = 1; level <= 11; ++level) {
        step *= 0.5;
        sum += node_sum(step, true);
        const double cur = h0 * step * sum;
        if (level >= 4 && std::fabs(cur - prev) <= tol * (std::fabs(cur) + 1e-300))
            return cur;
        prev = cur;
    }
    return prev;
}

// Chebyshev running integral on [a,b].
//
// Nodes are Chebyshev points of the second kind, x_k = midpoint +
// halfwidth*cos(k*pi/N), k = 0..N (descending). Given f at the nodes,
// returns the values of F(x) = int_a^x f at the same nodes, computed through
// the Chebyshev coefficient recurrence; spectrally accurate for smooth f.
class ChebGrid {
  public:
    ChebGrid(double a, double b, std::size_t n_intervals)
        : a_(a), b_(b), n_(n_intervals) {
        if (!(a < b)) throw std::invalid_argument("ChebGrid: need a < b");
        if (n_ < 4) throw std::invalid_argument("ChebGrid: need >= 4 intervals");
        nodes_.resize(n_ + 1);
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (std::size_t k = 0; k <= n_; ++k)
            nodes_[k] = c + h * std::cos(double(k) * pi_ / double(n_));
    }

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t size() const { return n_ + 1; }
    const std::vector<double>& nodes() const { return nodes_; }

    // Values -> Chebyshev coefficients (discrete cosine transform, direct).
    std::vector<double> coefficients(const std::vector<double>& vals) const {
        check(vals);
        const std::size_t N = n_;
        std::vector<double> c(N + 1, 0.0);
        for (std::size_t j = 0; j <= N; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k <= N; ++k) {
                const double w = (k == 0 || k == N) ? 0.5 : 1.0;
                s += w * vals[k] * std::cos(pi_ * double(j) * double(k) / double(N));
            }
            c[j] = 2.0 * s / double(N);
        }
        c[0] *= 0.5;
        c[N] *= 0.5;
        return c;
    }

    double eval(const std::vector<double>& coeff, double x) const {
        // Clenshaw on t = scaled x.
        const double t = (2.0 * x - (a_ + b_)) / (b_ - a_);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t j = coeff.size(); j-- > 1;) {
            const double b0 = 2.0 * t * b1 - b2 + coeff[j];
            b2 = b1;
            b1 = b0;
        }
        return t * b1 - b2 + coeff[0];
    }

    // F(x) = int_a^x f, returned at the grid nodes.
    std::vector<double> running_integral(const std::vector<double>& vals) const {
        check(vals);
        const std::size_t N = n_;
        const std::vector<double> c = coefficients(vals);
        // Antiderivative coefficients on [-1,1]: C_1 = c_0 - c_2/2 and
        // C_j = (c_{j-1} - c_{j+1}) / (2j) for j >= 2.
        std::vector<double> C(N + 2, 0.0);
        auto cc = [&](std::size_t j) { return j <= N ? c[j] : 0.0; };
        C[1] = cc(0) - 0.5 * cc(2);
        for (std::size_t j = 2; j <= N + 1; ++j)
            C[j] = (cc(j - 1) - cc(j + 1)) / (2.0 * double(j));
        const double half = 0.5 * (b_ - a_);
        for (auto& x : C) x *= half;
        // Fix the constant so F(a) = 0; node a corresponds to t = -1 where
        // T_j(-1) = (-1)^j.
        double Fa = 0.0;
        for (std::size_t j = 1; j < C.size(); ++j) Fa += (j % 2 == 0) ? C[j] : -C[j];
        C[0] = -Fa;
        std::vector<double> out(N + 1);
        for (std::size_t k = 0; k <= N; ++k) out[k] = eval(C, nodes_[k]);
        return out;
    }

  private:
    void check(const std::vector<double>& vals) const {
        if (vals.size() != n_ + 1) throw std::invalid_argument("ChebGrid: value count mismatch");
    }
    static constexpr double pi_ = 3.14159265358979323846;
    double a_, b_;
    std::size_t n_;
    std::vector<double> nodes_;
};

} // namespace sfbm
