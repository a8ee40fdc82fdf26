#include <catch2/catch_amalgamated.hpp>

#include "sfbm/special_functions.hpp"

#include <cmath>

using namespace sfbm;

TEST_CASE("gamma_fn matches high-precision oracle values") {
    // Reference values computed with 25-digit arithmetic.
    CHECK(gamma_fn(1.25) == Catch::Approx(0.9064024770554770779826713).epsilon(1e-12));
    CHECK(gamma_fn(1.8) == Catch::Approx(0.9313837709802426989090568).epsilon(1e-12));
    CHECK(gamma_fn(1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(5.0) == Catch::Approx(24.0).epsilon(1e-14));
    CHECK(gamma_fn(0.5) == Catch::Approx(std::sqrt(4.0 * std::atan(1.0))).epsilon(1e-14));
}

TEST_CASE("gamma_fn recurrence") {
    for (double x : {0.1, 0.37, 1.2, 2.9, 7.5}) {
        CHECK(gamma_fn(x + 1.0) == Catch::Approx(x * gamma_fn(x)).epsilon(1e-13));
    }
}

TEST_CASE("log_gamma consistent with gamma_fn") {
    for (double x : {0.2, 0.9, 1.25, 3.0, 11.0, 41.5}) {
        CHECK(std::exp(log_gamma(x)) == Catch::Approx(gamma_fn(x)).epsilon(1e-12));
    }
}

TEST_CASE("beta_fn matches oracle values and identities") {
    CHECK(beta_fn(0.6, 0.7) == Catch::Approx(2.15389087116132235749).epsilon(1e-12));
    CHECK(beta_fn(2.5, 3.5) == Catch::Approx(0.03681553890925538951323).epsilon(1e-12));
    // B(a, 1) = 1/a.
    for (double a : {0.3, 1.0, 2.7}) CHECK(beta_fn(a, 1.0) == Catch::Approx(1.0 / a).epsilon(1e-13));
    // Symmetry.
    CHECK(beta_fn(0.4, 0.8) == Catch::Approx(beta_fn(0.8, 0.4)).epsilon(1e-14));
}

TEST_CASE("regularized incomplete beta") {
    // 22-digit oracle values.
    CHECK(reg_inc_beta(0.8, 0.6, 0.3) == Catch::Approx(0.259328837958266504985).epsilon(1e-13));
    CHECK(reg_inc_beta(0.5, 0.5, 0.7) == Catch::Approx(0.6309898804344546172446).epsilon(1e-13));
    CHECK(reg_inc_beta(0.9, 0.35, 0.999) == Catch::Approx(0.9151691150064263669438).epsilon(1e-13));
    // Integer shape closed form: I_x(2,3) = x^2 (6 - 8x + 3x^2).
    CHECK(reg_inc_beta(2.0, 3.0, 0.4) == Catch::Approx(0.5248).epsilon(1e-14));
    // Mirror identity and edges.
    for (double x : {0.05, 0.3, 0.6, 0.95})
        CHECK(reg_inc_beta(0.7, 1.3, x) ==
              Catch::Approx(1.0 - reg_inc_beta(1.3, 0.7, 1.0 - x)).epsilon(1e-13));
    CHECK(reg_inc_beta(0.7, 1.3, 0.0) == 0.0);
    CHECK(reg_inc_beta(0.7, 1.3, 1.0) == 1.0);
    CHECK_THROWS_AS(reg_inc_beta(0.0, 1.0, 0.5), std::domain_error);
    // Monotone in x.
    double prev = 0.0;
    for (double x = 0.1; x < 1.0; x += 0.1) {
        const double cur = reg_inc_beta(0.35, 0.85, x);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("log_factorial") {
    CHECK(log_factorial(0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(log_factorial(5) == Catch::Approx(std::log(120.0)).epsilon(1e-14));
    CHECK(log_factorial(20) == Catch::Approx(std::log(2432902008176640000.0)).epsilon(1e-13));
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_fn(-1.5), std::domain_error);
    CHECK_THROWS_AS(beta_fn(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(log_gamma(-0.1), std::domain_error);
}
