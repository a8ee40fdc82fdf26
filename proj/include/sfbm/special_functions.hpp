#pragma once
// Gamma-family helpers on the positive half line.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sfbm {

inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: need x > 0");
#if defined(__GLIBC__) || defined(__unix__) || defined(__APPLE__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double gamma_fn(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma_fn: need x > 0");
    return std::tgamma(x);
}

inline double beta_fn(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("beta_fn: need a, b > 0");
    return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

inline double log_factorial(std::uint64_t n) {
    return log_gamma(double(n) + 1.0);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
// Valid and fast for x < (a+1)/(a+b+2); the caller flips to the mirror
// otherwise.
inline double inc_beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * double(m);
        double aa = double(m) * (b - double(m)) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + double(m)) * (qab + double(m)) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("inc_beta_cf: no convergence");
}

} // namespace detail

// Regularized incomplete beta I_x(a, b). The branch choice keeps the
// continued fraction in its fast region and avoids cancellation when the
// result is near 0.
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("reg_inc_beta: need a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::inc_beta_cf(a, b, x) / a;
    return 1.0 - front * detail::inc_beta_cf(b, a, 1.0 - x) / b;
}

} // namespace sfbm
