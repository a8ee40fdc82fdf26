// Bound evaluator: closed-form checks against independently computed
// special-function compositions, scaling identities, regime-error behavior,
// summability verdicts, and the exact rational threshold tables.
#include <catch2/catch_amalgamated.hpp>

#include "sfbm/bound_eval.hpp"
#include "sfbm/special_functions.hpp"

#include <cmath>
#include <string>
#include <vector>

using Catch::Approx;

namespace {

sfbm::BoundParams flat_params(std::size_t m, std::size_t d, double h) {
    sfbm::BoundParams p;
    p.h = h;
    p.d = d;
    p.alpha.assign(m, std::vector<unsigned>(d, 0));
    p.eps_flags.assign(m, 0);
    p.f_norms.assign(m, 1.0);
    p.t = 1.0;
    return p;
}

} // namespace

TEST_CASE("main estimate matches direct special-function composition") {
    // One derivative-free factor, no kernel weight: every prefactor is 1 and
    // the bound collapses to Gamma(2 - 2h)^{-1/2}.
    auto p = flat_params(1, 1, 0.1);
    const double v = sfbm::main_estimate_rhs(p);
    CHECK(v == Approx(std::pow(sfbm::gamma_fn(1.8), -0.5)).epsilon(1e-13));
    CHECK(v == Approx(1.0361811009813074).epsilon(1e-12));

    // Doubling the window scales by (t - theta)^{-h + 1}.
    p.t = 2.0;
    CHECK(sfbm::main_estimate_rhs(p) == Approx(std::pow(2.0, 0.9) * v).epsilon(1e-12));
}

TEST_CASE("main estimate frozen composite value") {
    // Two factors in dimension 2 with mixed derivative orders, one kernel
    // weight, explicit gamma; value frozen from a 30-digit evaluation.
    sfbm::BoundParams p;
    p.h = 0.08;
    p.d = 2;
    p.alpha = {{1, 0}, {0, 2}};
    p.eps_flags = {1, 0};
    p.gamma = 0.0008;
    p.theta = 0.25;
    p.t = 0.75;
    p.f_norms = {1.5, 0.7};
    p.constant = 2.0;
    CHECK(sfbm::main_estimate_rhs(p) == Approx(54.579534551876672).epsilon(1e-12));

    // gamma <= 0 selects the default h/100, which is the same 0.0008 here.
    sfbm::BoundParams q = p;
    q.gamma = 0.0;
    CHECK(sfbm::main_estimate_rhs(q) == Approx(sfbm::main_estimate_rhs(p)).epsilon(1e-15));
}

TEST_CASE("main estimate scaling identities") {
    SECTION("halving every norm scales the bound by 2^-m") {
        auto p = flat_params(3, 1, 0.1);
        const double base = sfbm::main_estimate_rhs(p);
        p.f_norms.assign(3, 0.5);
        CHECK(sfbm::main_estimate_rhs(p) == Approx(base / 8.0).epsilon(1e-13));
    }
    SECTION("constant enters as C^(m + |alpha|)") {
        sfbm::BoundParams p;
        p.h = 0.1;
        p.d = 1;
        p.alpha = {{1}, {2}};
        p.eps_flags = {0, 0};
        p.t = 1.0;
        p.f_norms = {1.0, 1.0};
        const double base = sfbm::main_estimate_rhs(p);
        p.constant = 2.0;
        CHECK(sfbm::main_estimate_rhs(p) == Approx(32.0 * base).epsilon(1e-13));
    }
    SECTION("theta is inert while no kernel weight is active") {
        auto p = flat_params(2, 1, 0.15);
        p.theta = 0.4;
        p.t = 1.4;
        const double a = sfbm::main_estimate_rhs(p);
        p.theta = 0.7;
        p.t = 1.7;
        CHECK(sfbm::main_estimate_rhs(p) == Approx(a).epsilon(1e-15));

        // With a kernel weight the same shift moves the value.
        p.eps_flags = {1, 0};
        const double b = sfbm::main_estimate_rhs(p);
        p.theta = 0.4;
        p.t = 1.4;
        CHECK(sfbm::main_estimate_rhs(p) != Approx(b).epsilon(1e-6));
    }
}

TEST_CASE("main estimate gamma dependence") {
    // One weighted factor with one derivative, unit window: the value
    // depends on gamma only through Gamma(0.2 - 2 gamma)^{-1/2}.
    sfbm::BoundParams p;
    p.h = 0.2;
    p.d = 1;
    p.alpha = {{1}};
    p.eps_flags = {1};
    p.theta = 0.3;
    p.t = 1.3;
    p.f_norms = {1.0};

    SECTION("continuous and monotone over the admissible gamma range") {
        std::vector<double> vals;
        for (int i = 1; i <= 9; ++i) {
            p.gamma = 0.01 * i;
            vals.push_back(sfbm::main_estimate_rhs(p));
        }
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            CHECK(vals[i + 1] < vals[i]);
            CHECK(vals[i + 1] > 0.5 * vals[i]);  // no jumps across the schedule
        }
    }
    SECTION("vanishes as the Gamma argument approaches zero from above") {
        // Fixed gamma, h driven toward the regime boundary (1 - 2 gamma)/4:
        // the Gamma argument 1 - 4h - 2 gamma tends to 0+ and the reciprocal
        // square root of a blowing-up Gamma drags the bound to zero.
        p.gamma = 0.001;
        std::vector<double> vals;
        for (double h : {0.2395, 0.2465, 0.2485, 0.2492, 0.24944}) {
            p.h = h;
            vals.push_back(sfbm::main_estimate_rhs(p));
        }
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) CHECK(vals[i + 1] < vals[i]);
        CHECK(vals.back() < 0.25 * vals.front());
    }
}

TEST_CASE("main estimate regime and input validation") {
    SECTION("regime error names the offending factor") {
        sfbm::BoundParams p;
        p.h = 0.3;
        p.d = 1;
        p.alpha = {{0}, {1}};
        p.eps_flags = {0, 0};
        p.t = 1.0;
        p.f_norms = {1.0, 1.0};
        CHECK_THROWS_AS(sfbm::main_estimate_rhs(p), std::domain_error);
        try {
            sfbm::main_estimate_rhs(p);
        } catch (const std::domain_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("factor 1") != std::string::npos);
            CHECK(msg.find("(1/2 - gamma)/(d - 1 + 2|alpha_j|)") != std::string::npos);
        }
        // A derivative-free factor in dimension one is unconstrained.
        p.alpha = {{0}, {0}};
        CHECK_NOTHROW(sfbm::main_estimate_rhs(p));
    }
    SECTION("invalid inputs") {
        auto p = flat_params(2, 1, 0.1);
        auto bad = [&](auto&& mutate) {
            auto q = p;
            mutate(q);
            CHECK_THROWS_AS(sfbm::main_estimate_rhs(q), std::invalid_argument);
        };
        bad([](sfbm::BoundParams& q) { q.alpha.clear(); q.eps_flags.clear(); q.f_norms.clear(); });
        bad([](sfbm::BoundParams& q) { q.alpha[0] = {0, 0}; });
        bad([](sfbm::BoundParams& q) { q.eps_flags.pop_back(); });
        bad([](sfbm::BoundParams& q) { q.eps_flags[0] = 2; });
        bad([](sfbm::BoundParams& q) { q.f_norms.pop_back(); });
        bad([](sfbm::BoundParams& q) { q.f_norms[1] = 0.0; });
        bad([](sfbm::BoundParams& q) { q.constant = 0.0; });
        bad([](sfbm::BoundParams& q) { q.h = 0.6; });
        bad([](sfbm::BoundParams& q) { q.gamma = 0.2; });
        bad([](sfbm::BoundParams& q) { q.theta = 1.0; });
        bad([](sfbm::BoundParams& q) { q.eps_flags[0] = 1; });  // needs theta > 0
    }
}

TEST_CASE("series term frozen values and direct agreement") {
    CHECK(sfbm::series_term(0.1, 1, 1, 1, 1) == Approx(1.0450984558917346).epsilon(1e-13));
    CHECK(sfbm::series_term(0.12, 2, 2, 2, 4) == Approx(0.69326512428797976).epsilon(1e-13));

    // Log-space evaluation agrees with the direct composition while the
    // factorials still fit in a double.
    for (std::size_t m = 1; m <= 3; ++m) {
        struct Case { double h; std::size_t d, k, q; };
        for (const auto& c : {Case{0.1, 1, 1, 1}, Case{0.05, 2, 2, 2}}) {
            const double P = std::ldexp(1.0, int(c.q));
            const double a = P * double(m + c.k - 1);
            const double g = -c.h * (2.0 * double(c.d) * P * double(m) + 4.0 * a) + 2.0 * P * double(m);
            const double direct =
                std::pow(std::pow(2.0 * sfbm::gamma_fn(a + 1.0), 0.25) / std::sqrt(sfbm::gamma_fn(g)),
                         1.0 / P);
            const double logged = sfbm::series_term(c.h, c.d, c.k, c.q, m);
            CHECK(logged == Approx(direct).epsilon(1e-10));
            CHECK(logged > 0.0);
        }
    }
}

TEST_CASE("series term regime failure at the closed-form boundary") {
    // h = 0.25, d = 1, k = 3, q = 1: the Gamma argument is exactly m - 4 in
    // binary arithmetic, so the linear solve 2h(k-1)/(1 - h(d+2)) = 4 marks
    // the last failing depth.
    for (std::size_t m = 1; m <= 4; ++m)
        CHECK_THROWS_AS(sfbm::series_term(0.25, 1, 3, 1, m), std::domain_error);
    CHECK_NOTHROW(sfbm::series_term(0.25, 1, 3, 1, 5));
    try {
        sfbm::series_term(0.25, 1, 3, 1, 4);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("m = 4") != std::string::npos);
    }

    // Above 1/(d+2) the Gamma argument is negative from the first term on.
    CHECK_THROWS_AS(sfbm::series_term(0.4, 1, 1, 1, 1), std::domain_error);

    CHECK_THROWS_AS(sfbm::series_term(0.6, 1, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(sfbm::series_term(0.1, 0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(sfbm::series_term(0.1, 1, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(sfbm::series_term(0.1, 1, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("summability scan flips from decay to regime failure across the threshold") {
    struct Pair { std::size_t d, k; double last_decay, first_fail; };
    const std::vector<Pair> pairs = {
        {1, 1, 0.23, 0.25}, {1, 2, 0.11, 0.13}, {2, 1, 0.15, 0.17}, {2, 2, 0.09, 0.11}};
    std::vector<double> grid;
    for (int j = 0; j <= 12; ++j) grid.push_back(0.01 + 0.02 * j);

    for (const auto& pr : pairs) {
        const auto table = sfbm::summability_scan(pr.d, pr.k, 1, grid, 50);
        REQUIRE(table.size() == grid.size());
        const double thr = 1.0 / (2.0 * (double(pr.d) - 1.0 + 2.0 * double(pr.k)));
        for (const auto& row : table) {
            CHECK(row.analytic_threshold == Approx(thr).epsilon(1e-15));
            // No growth verdicts on this grid: the flip is a single step wide.
            CHECK(row.verdict != sfbm::SummabilityVerdict::growth);
            if (row.h <= pr.last_decay + 1e-12) {
                CHECK(row.verdict == sfbm::SummabilityVerdict::decay);
                CHECK(row.tail_ratio < 1.0);
            } else {
                CHECK(row.verdict == sfbm::SummabilityVerdict::regime_failure);
                CHECK(std::isnan(row.tail_ratio));
            }
        }
        CHECK(pr.first_fail - pr.last_decay == Approx(0.02).epsilon(1e-9));
        CHECK(pr.last_decay < thr);
        CHECK(pr.first_fail >= thr - 1e-12);
    }
}

TEST_CASE("summability scan pinned tail ratio") {
    const auto table = sfbm::summability_scan(1, 1, 1, {0.2}, 50);
    REQUIRE(table.size() == 1);
    CHECK(table[0].verdict == sfbm::SummabilityVerdict::decay);
    CHECK(table[0].tail_ratio == Approx(0.55089182728375290).epsilon(1e-10));
}

TEST_CASE("summability scan is stable across chaining depths") {
    for (std::size_t q : {1u, 2u, 3u}) {
        for (const auto& dk : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {2, 2}}) {
            const double thr = 1.0 / (2.0 * (double(dk.first) - 1.0 + 2.0 * double(dk.second)));
            const auto below = sfbm::summability_scan(dk.first, dk.second, q, {thr - 0.02}, 50);
            CHECK(below[0].verdict == sfbm::SummabilityVerdict::decay);
            const auto above = sfbm::summability_scan(dk.first, dk.second, q, {thr + 0.02}, 50);
            CHECK(above[0].verdict == sfbm::SummabilityVerdict::regime_failure);
        }
    }
}

TEST_CASE("summability scan reports growth in the narrow pre-threshold band") {
    // Just under the (1,1) threshold the hypothesis still holds but the
    // terms rise through depth 50; the scan must say so rather than decay.
    const auto table = sfbm::summability_scan(1, 1, 1, {0.245}, 50);
    REQUIRE(table.size() == 1);
    CHECK(table[0].verdict == sfbm::SummabilityVerdict::growth);
    CHECK(table[0].tail_ratio > 1.05);
}

TEST_CASE("summability scan validation") {
    CHECK_THROWS_AS(sfbm::summability_scan(1, 1, 1, {0.1}, 19), std::invalid_argument);
    CHECK_THROWS_AS(sfbm::summability_scan(1, 1, 1, {0.6}, 50), std::invalid_argument);
    CHECK_THROWS_AS(sfbm::summability_scan(0, 1, 1, {0.1}, 50), std::invalid_argument);
    CHECK_THROWS_AS(sfbm::summability_scan(1, 0, 1, {0.1}, 50), std::invalid_argument);
    CHECK(sfbm::summability_scan(1, 1, 1, {}, 50).empty());
}

TEST_CASE("hurst threshold table is exact in rationals") {
    const auto table = sfbm::hurst_thresholds(1);
    REQUIRE(table.size() == 9);
    auto entry = [&](const std::string& name) {
        for (const auto& e : table)
            if (e.name == name) return e;
        FAIL("missing entry " + name);
        return table[0];
    };
    CHECK(entry("exp_moment").num == 1);
    CHECK(entry("exp_moment").den == 4);
    CHECK(entry("existence").den == 6);
    CHECK(entry("cg_flow").den == 8);
    CHECK(entry("flow_k1").den == 4);
    CHECK(entry("flow_k2").den == 8);
    CHECK(entry("flow_k3").den == 12);
    CHECK(entry("flow_k1").value() == 0.25);
    CHECK(entry("flow_k3").value() == Approx(1.0 / 12.0).epsilon(1e-16));

    // The twice-differentiable flow threshold coincides with the
    // Lipschitz-flow one in every dimension, as identical integers.
    for (std::size_t d : {1u, 2u, 3u, 5u}) {
        const auto t = sfbm::hurst_thresholds(d);
        long long cg = 0, k2 = 0;
        for (const auto& e : t) {
            if (e.name == "cg_flow") cg = e.den;
            if (e.name == "flow_k2") k2 = e.den;
        }
        CHECK(cg == k2);
        CHECK(cg == 2 * ((long long)d + 3));
    }

    // Monotone: thresholds shrink as either the dimension or the
    // derivative order grows.
    for (long long k = 1; k < 6; ++k) {
        const auto a = entry("flow_k" + std::to_string(k));
        const auto b = entry("flow_k" + std::to_string(k + 1));
        CHECK(a.value() > b.value());
    }
    const auto d2 = sfbm::hurst_thresholds(2);
    for (std::size_t i = 0; i < table.size(); ++i) CHECK(d2[i].value() < table[i].value());

    CHECK_THROWS_AS(sfbm::hurst_thresholds(0), std::invalid_argument);
    CHECK(std::string(sfbm::to_string(sfbm::SummabilityVerdict::decay)) == "decay");
    CHECK(std::string(sfbm::to_string(sfbm::SummabilityVerdict::growth)) == "growth");
    CHECK(std::string(sfbm::to_string(sfbm::SummabilityVerdict::regime_failure)) ==
          "regime_failure");
}
