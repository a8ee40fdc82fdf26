#pragma once
// Uniform grids: scalar functions sampled on a closed interval, and the
// time grids used by the path samplers and solvers.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sfbm {

// f sampled at x_i = a + i*(b-a)/(n-1), i = 0..n-1, both endpoints included.
struct SampledFunction {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> values;

    SampledFunction() = default;

    SampledFunction(double a_, double b_, std::vector<double> v)
        : a(a_), b(b_), values(std::move(v)) {
        if (!(a < b)) throw std::invalid_argument("SampledFunction: need a < b");
        if (values.size() < 2) throw std::invalid_argument("SampledFunction: need >= 2 samples");
        for (double x : values)
            if (!std::isfinite(x)) throw std::invalid_argument("SampledFunction: non-finite sample");
    }

    template <class F>
    static SampledFunction sampled(double a, double b, std::size_t n, F&& f) {
        if (n < 2) throw std::invalid_argument("SampledFunction: need >= 2 samples");
        std::vector<double> v(n);
        const double h = (b - a) / double(n - 1);
        for (std::size_t i = 0; i < n; ++i) v[i] = f(a + double(i) * h);
        return SampledFunction(a, b, std::move(v));
    }

    std::size_t size() const { return values.size(); }
    double step() const { return (b - a) / double(values.size() - 1); }
    double node(std::size_t i) const { return a + double(i) * step(); }

    // Piecewise-linear evaluation; x clamped to [a, b].
    double value_at(double x) const {
        const double h = step();
        double u = (x - a) / h;
        if (u <= 0.0) return values.front();
        if (u >= double(values.size() - 1)) return values.back();
        const std::size_t j = std::size_t(u);
        const double w = u - double(j);
        return values[j] * (1.0 - w) + values[j + 1] * w;
    }
};

// Uniform partition of [0, t_end] into n_steps cells; nodes t_i = i*dt.
struct TimeGrid {
    double t_end = 1.0;
    std::size_t n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double t_end_, std::size_t n_steps_) : t_end(t_end_), n_steps(n_steps_) {
        if (!(t_end > 0.0) || !std::isfinite(t_end))
            throw std::invalid_argument("TimeGrid: need t_end > 0");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: need n_steps >= 1");
    }

    double dt() const { return t_end / double(n_steps); }
    double node(std::size_t i) const { return t_end * double(i) / double(n_steps); }
    std::size_t n_nodes() const { return n_steps + 1; }
};

inline double rel_l2_error(const std::vector<double>& got, const std::vector<double>& want) {
    if (got.size() != want.size()) throw std::invalid_argument("rel_l2_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - want[i];
        num += d * d;
        den += want[i] * want[i];
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

} // namespace sfbm
