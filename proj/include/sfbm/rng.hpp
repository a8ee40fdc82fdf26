#pragma once
// Counter-based Gaussian streams.
//
// Draw i of stream s under seed k is a pure function of (k, s, i): a
// Philox4x32-10 block keyed by the seed, with (stream, index) as the
// counter, mapped to a uniform in (0,1) and through the inverse normal
// CDF (Wichura's PPND16). Results are therefore independent of thread
// count and scheduling order.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sfbm {

namespace detail {

struct PhiloxBlock {
    std::array<std::uint32_t, 4> x;
};

inline PhiloxBlock philox4x32_10(std::uint64_t key, std::uint64_t ctr_lo, std::uint64_t ctr_hi) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    std::uint32_t k0 = std::uint32_t(key), k1 = std::uint32_t(key >> 32);
    std::array<std::uint32_t, 4> c{std::uint32_t(ctr_lo), std::uint32_t(ctr_lo >> 32),
                                   std::uint32_t(ctr_hi), std::uint32_t(ctr_hi >> 32)};
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * c[0];
        const std::uint64_t p1 = std::uint64_t(M1) * c[2];
        const std::array<std::uint32_t, 4> n{std::uint32_t(p1 >> 32) ^ c[1] ^ k0,
                                             std::uint32_t(p1),
                                             std::uint32_t(p0 >> 32) ^ c[3] ^ k1,
                                             std::uint32_t(p0)};
        c = n;
        k0 += W0;
        k1 += W1;
    }
    return PhiloxBlock{c};
}

} // namespace detail

// Uniform in the open interval (0,1), 53-bit resolution.
inline double uniform_open01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const auto b = detail::philox4x32_10(seed, index, stream);
    const std::uint64_t x = (std::uint64_t(b.x[0]) << 32) | b.x[1];
    return (double(x >> 11) + 0.5) * 0x1.0p-53;
}

// Inverse of the standard normal CDF (Wichura, algorithm AS 241, PPND16).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_normal_cdf: need p in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -x : x;
}

// Standard normal draw, one per (seed, stream, index).
inline double normal_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return inverse_normal_cdf(uniform_open01(seed, stream, index));
}

// Stream ids: path index, vector component and a small domain tag packed so
// that distinct (path, component, domain) triples never collide.
inline std::uint64_t stream_id(std::uint64_t path, std::uint32_t component, std::uint32_t domain = 0) {
    if (component >= 256u || domain >= 256u)
        throw std::invalid_argument("stream_id: component and domain must be < 256");
    if (path >= (std::uint64_t(1) << 48))
        throw std::invalid_argument("stream_id: path index must be < 2^48");
    return (path << 16) | (std::uint64_t(component) << 8) | domain;
}

} // namespace sfbm
