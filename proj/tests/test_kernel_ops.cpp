#include <catch2/catch_amalgamated.hpp>

#include "sfbm/fbm.hpp"
#include "sfbm/kernel_ops.hpp"
#include "sfbm/special_functions.hpp"

#include <cmath>
#include <vector>

using namespace sfbm;

namespace {
constexpr double kPi = 3.14159265358979323846;

double ref_covariance(double h, double t, double s) {
    return 0.5 * (std::pow(t, 2 * h) + std::pow(s, 2 * h) - std::pow(std::abs(t - s), 2 * h));
}
} // namespace

TEST_CASE("normalization constant") {
    // Independent path: B(1/2, 3/4) through the Gamma composition.
    const double b = gamma_fn(0.5) * gamma_fn(0.75) / gamma_fn(1.25);
    const double want = std::sqrt(0.5 / (0.5 * b));
    CHECK(c_h(HurstParam(0.25)) == Catch::Approx(want).epsilon(1e-14));
    CHECK(c_h(HurstParam(0.25)) == Catch::Approx(0.6459980037407518915771).epsilon(1e-14));
    for (double h : {0.05, 0.15, 0.25, 0.35, 0.45}) CHECK(c_h(HurstParam(h)) > 0.0);
    CHECK_THROWS_AS(c_h(HurstParam(0.5)), std::invalid_argument);
    CHECK_THROWS_AS(c_h(HurstParam(0.7)), std::invalid_argument);
}

TEST_CASE("kernel spot values against high-precision oracles") {
    // 25-digit evaluations of the closed-form inner integral.
    CHECK(kh_kernel(HurstParam(0.2), 1.0, 0.3) ==
          Catch::Approx(0.7460194493260274839486).epsilon(1e-9));
    CHECK(kh_kernel(HurstParam(0.1), 2.0, 1.0) ==
          Catch::Approx(0.4358156802935470031102).epsilon(1e-9));
    CHECK(kh_kernel(HurstParam(0.3), 1.0, 0.5) ==
          Catch::Approx(0.8730141143386679347671).epsilon(1e-9));
    CHECK(kh_kernel(HurstParam(0.45), 1.0, 0.999) ==
          Catch::Approx(1.334738545247891483569).epsilon(1e-9));
    CHECK(kh_kernel(HurstParam(0.25), 0.7, 0.2) ==
          Catch::Approx(0.8752532871634700617491).epsilon(1e-9));
}

TEST_CASE("kernel homogeneity and domain") {
    const HurstParam h(0.3);
    const double c = 3.7;
    const double lhs = kh_kernel(h, c * 1.0, c * 0.4);
    const double rhs = std::pow(c, h.h - 0.5) * kh_kernel(h, 1.0, 0.4);
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-8));
    for (double s : {0.05, 0.2, 0.5, 0.8, 0.95}) CHECK(kh_kernel(h, 1.0, s) > 0.0);
    CHECK_THROWS_AS(kh_kernel(h, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(kh_kernel(h, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kh_kernel(h, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("kernel factorization reproduces the covariance") {
    // int_0^{min(t,s)} K(t,u) K(s,u) du = R(t,s). The integrand is singular at
    // both endpoints, which the tanh-sinh rule absorbs.
    for (double h : {0.1, 0.3}) {
        const HurstParam hp(h);
        const double c = c_h(hp);
        for (auto [t, s] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {2.0, 1.0}, {1.0, 0.5}}) {
            auto f = [&](double u) {
                return detail::kh_kernel_with_c(c, h, t, u) *
                       detail::kh_kernel_with_c(c, h, s, u);
            };
            const double got = integrate_tanh_sinh(f, 0.0, std::min(t, s), 1e-9);
            CHECK(got == Catch::Approx(ref_covariance(h, t, s)).epsilon(1e-2));
        }
    }
}

TEST_CASE("row variance identity of the weight matrix") {
    // sum_j w(i,j)^2 dt = int_0^{t_i} K(t_i,s)^2 ds = t_i^{2h}; the RMS layer
    // keeps the discretization bias far below the midpoint-only rule.
    const HurstParam h(0.2);
    const TimeGrid grid(1.0, 128);
    const auto vw = volterra_weights(h, grid);
    for (std::size_t i : {1ul, 4ul, 16ul, 64ul, 128ul}) {
        double var = 0.0;
        for (std::size_t j = 0; j < i; ++j) var += vw.weight(i, j) * vw.weight(i, j);
        var *= grid.dt();
        CHECK(var == Catch::Approx(std::pow(grid.node(i), 2 * h.h)).epsilon(1e-3));
    }
}

TEST_CASE("isometry image of a smooth function") {
    // Frozen oracles computed from both closed-form representations in
    // 30-digit arithmetic (they agree to 15 digits).
    const HurstParam h(0.3);
    auto phi = SampledFunction::sampled(0.0, 1.0, 1025,
                                        [](double u) { return std::sin(kPi * u) + 0.5; });
    auto ks = kh_star(h, phi);
    CHECK(ks.value_at(0.25) == Catch::Approx(0.914875244545297228).epsilon(2e-4));
    CHECK(ks.value_at(0.50) == Catch::Approx(1.40448655694790925).epsilon(2e-4));
    CHECK(ks.value_at(0.75) == Catch::Approx(1.32957586349683377).epsilon(2e-4));
}

TEST_CASE("isometry representations agree on smooth inputs") {
    const HurstParam h(0.35);
    auto phi = SampledFunction::sampled(0.0, 1.0, 257,
                                        [](double u) { return std::cos(2.0 * u) + 0.25 * u; });
    auto a = kh_star(h, phi);
    auto b = kh_star_integral_form(h, phi);
    REQUIRE(a.size() == b.size());
    CHECK(rel_l2_error(a.values, b.values) < 1e-2);
}

TEST_CASE("isometry maps indicators to kernel sections") {
    const HurstParam h(0.3);
    const double t = 0.75;
    const std::size_t n = 513;
    auto phi = SampledFunction::sampled(0.0, 1.0, n,
                                        [&](double u) { return u <= t ? 1.0 : 0.0; });
    auto ks = kh_star(h, phi);
    // Away from the singular end s=0 and the jump at s=t.
    for (double s : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65}) {
        const double want = kh_kernel(h, t, s);
        CHECK(ks.value_at(s) == Catch::Approx(want).epsilon(5e-2));
    }
}

TEST_CASE("discrete isometry recovers the covariance") {
    const HurstParam h(0.3);
    const double t = 0.75, u = 0.5;
    const std::size_t n = 513;
    auto ind_t = SampledFunction::sampled(0.0, 1.0, n,
                                          [&](double x) { return x <= t ? 1.0 : 0.0; });
    auto ind_u = SampledFunction::sampled(0.0, 1.0, n,
                                          [&](double x) { return x <= u ? 1.0 : 0.0; });
    auto a = kh_star(h, ind_t);
    auto b = kh_star(h, ind_u);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += a.values[j] * b.values[j] * a.step();
    CHECK(acc == Catch::Approx(ref_covariance(h.h, t, u)).epsilon(5e-2));
}

TEST_CASE("operator collapses to the running integral near h = 1/2") {
    auto phi = SampledFunction::sampled(0.0, 1.0, 257,
                                        [](double u) { return std::cos(u) + 0.5; });
    auto near = kh_operator(HurstParam(0.499), phi);
    auto exact = rl_integral_left(1.0, phi);
    CHECK(rel_l2_error(near.values, exact.values) < 1e-2);
    auto at_half = kh_operator(HurstParam(0.5), phi);
    for (std::size_t i = 0; i < phi.size(); ++i)
        CHECK(at_half.values[i] == Catch::Approx(exact.values[i]).margin(1e-14));
}

TEST_CASE("operator is linear") {
    const HurstParam h(0.3);
    auto f = SampledFunction::sampled(0.0, 1.0, 129, [](double u) { return std::sin(u); });
    auto g = SampledFunction::sampled(0.0, 1.0, 129, [](double u) { return u * u + 1.0; });
    std::vector<double> mix(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) mix[i] = 2.0 * f.values[i] - 3.0 * g.values[i];
    auto Km = kh_operator(h, SampledFunction(0.0, 1.0, mix));
    auto Kf = kh_operator(h, f);
    auto Kg = kh_operator(h, g);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(Km.values[i] ==
              Catch::Approx(2.0 * Kf.values[i] - 3.0 * Kg.values[i]).margin(1e-12));
}

TEST_CASE("inverse at h = 1/2 returns the derivative") {
    auto phi = SampledFunction::sampled(0.0, 1.0, 65, [](double u) { return u * u; });
    auto dphi = SampledFunction::sampled(0.0, 1.0, 65, [](double u) { return 2.0 * u; });
    auto inv = kh_inverse(HurstParam(0.5), phi, dphi);
    for (std::size_t i = 0; i < phi.size(); ++i)
        CHECK(inv.values[i] == dphi.values[i]);
}

TEST_CASE("inverse of the identity path matches the power closed form") {
    // phi(s) = s, phi' = 1: out = Gamma(3/2-h)/Gamma(2-2h) s^{1/2-h}.
    const std::size_t n = 2049;
    auto phi = SampledFunction::sampled(0.0, 1.0, n, [](double u) { return u; });
    auto one = SampledFunction::sampled(0.0, 1.0, n, [](double) { return 1.0; });
    {
        auto inv = kh_inverse(HurstParam(0.2), phi, one);
        CHECK(inv.value_at(0.5) == Catch::Approx(0.8158480146036769520279).epsilon(1e-4));
    }
    {
        auto inv = kh_inverse(HurstParam(0.45), phi, one);
        CHECK(inv.value_at(0.5) == Catch::Approx(0.988429469187239950756).epsilon(1e-4));
    }
}

TEST_CASE("inverse undoes the operator on smooth inputs") {
    // The derivative of the operator image is formed by central differences;
    // its value at 0 is the exact limit 0.
    const HurstParam h(0.3);
    const std::size_t n = 4097;
    auto psi = SampledFunction::sampled(0.0, 1.0, n,
                                        [](double u) { return std::sin(kPi * u) * (1.0 + 0.3 * u); });
    REQUIRE(psi.values[0] == 0.0);
    auto phi = kh_operator(h, psi);
    const double step = phi.step();
    std::vector<double> dphi(n);
    dphi[0] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        dphi[i] = (phi.values[i + 1] - phi.values[i - 1]) / (2.0 * step);
    dphi[n - 1] = (phi.values[n - 1] - phi.values[n - 2]) / step;
    auto back = kh_inverse(h, phi, SampledFunction(0.0, 1.0, std::move(dphi)));
    CHECK(rel_l2_error(back.values, psi.values) < 1e-2);
}

TEST_CASE("wiener recovery inverts the volterra transform") {
    const HurstParam h(0.2);
    const TimeGrid grid(1.0, 128);
    const auto vw = volterra_weights(h, grid);
    auto w = make_wiener_batch(grid, 2, 3, 99);
    auto bh = sample_fbm_volterra(vw, w);
    auto rec = wiener_from_fbm(vw, bh);
    double max_err = 0.0;
    for (std::size_t i = 0; i < w.data.size(); ++i)
        max_err = std::max(max_err, std::abs(rec.data[i] - w.data[i]));
    CHECK(max_err < 1e-10);
}

TEST_CASE("wiener recovery at h = 1/2 reproduces increments") {
    const TimeGrid grid(1.0, 64);
    auto w = make_wiener_batch(grid, 1, 2, 7);
    auto bh = sample_fbm_volterra(HurstParam(0.5), grid, w);
    auto rec = wiener_from_fbm(HurstParam(0.5), bh);
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t i = 1; i <= 64; ++i)
            CHECK(rec.at(p, i, 0) - rec.at(p, i - 1, 0) ==
                  Catch::Approx(w.at(p, i, 0) - w.at(p, i - 1, 0)).margin(1e-12));
}

TEST_CASE("recovered driving noise is nearly white") {
    // Exactly-distributed fractional paths pushed through the triangular
    // solve yield near-white increments. The per-cell weight quadrature
    // carries a self-similar distortion near the diagonal that does NOT
    // shrink with n (measured: variance ratio 1.042..1.059 for n in
    // 32..256 at h = 0.25, lag-1 correlation -0.021), so the gates below
    // check scale and approximate whiteness; exact inversion of the
    // discrete transform is covered by the round-trip test above.
    const HurstParam h(0.25);
    const TimeGrid grid(1.0, 64);
    const std::size_t count = 2000;
    auto bh = sample_fbm_cholesky(h, grid, 1, count, 2024);
    auto rec = wiener_from_fbm(h, bh);
    double acc = 0.0, lag = 0.0;
    std::size_t m = 0, ml = 0;
    for (std::size_t p = 0; p < count; ++p) {
        double prev = 0.0;
        for (std::size_t i = 1; i <= grid.n_steps; ++i) {
            const double d = rec.at(p, i, 0) - rec.at(p, i - 1, 0);
            acc += d * d;
            ++m;
            if (i > 1) {
                lag += prev * d;
                ++ml;
            }
            prev = d;
        }
    }
    const double var = acc / double(m);
    CHECK(std::abs(var / grid.dt() - 1.0) < 0.08);
    CHECK(std::abs(lag / double(ml) / var) < 0.05);
}

TEST_CASE("kernel op domain errors") {
    auto phi = SampledFunction::sampled(0.0, 1.0, 65, [](double u) { return u; });
    CHECK_THROWS_AS(kh_star(HurstParam(0.5), phi), std::invalid_argument);
    CHECK_THROWS_AS(kh_operator(HurstParam(0.7), phi), std::invalid_argument);
    auto off = SampledFunction::sampled(0.5, 1.0, 65, [](double u) { return u; });
    CHECK_THROWS_AS(kh_star(HurstParam(0.3), off), std::invalid_argument);
    auto short_prime = SampledFunction::sampled(0.0, 1.0, 33, [](double) { return 1.0; });
    CHECK_THROWS_AS(kh_inverse(HurstParam(0.3), phi, short_prime), std::invalid_argument);
}
