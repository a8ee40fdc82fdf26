#pragma once
// Closed-form evaluation of the moment-bound machinery: the right-hand side
// of the expected-simplex-integral estimate, the terms of the flow-derivative
// moment series, a summability scan over the Hurst parameter, and the exact
// rational threshold tables. All factorial/Gamma arithmetic runs in log
// space; verdict logic never exponentiates.

#include "sfbm/special_functions.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfbm {

// ---------------------------------------------------------------------------
// Expected-simplex-integral bound.

// Inputs of the m-factor bound: one multi-index (length d) and one 0/1
// weight flag per factor. gamma <= 0 selects the default h/100.
struct BoundParams {
    double h = 0.1;
    std::size_t d = 1;
    std::vector<std::vector<unsigned>> alpha;
    std::vector<int> eps_flags;
    double gamma = 0.0;
    double theta = 0.0;
    double t = 1.0;
    std::vector<double> f_norms;  // L1-in-space, sup-in-time norm per factor
    double constant = 1.0;        // unspecified universal constant, reported as-is

    std::size_t m() const { return alpha.size(); }
    double gamma_eff() const { return gamma > 0.0 ? gamma : h / 100.0; }

    std::size_t factor_total(std::size_t j) const {
        std::size_t s = 0;
        for (unsigned v : alpha[j]) s += v;
        return s;
    }
    // |alpha^{(l)}|: derivatives of component l summed over the factors
    std::size_t level_sum(std::size_t l) const {
        std::size_t s = 0;
        for (const auto& mi : alpha) s += mi[l];
        return s;
    }
    std::size_t alpha_total() const {
        std::size_t s = 0;
        for (std::size_t j = 0; j < alpha.size(); ++j) s += factor_total(j);
        return s;
    }
    std::size_t eps_sum() const {
        std::size_t s = 0;
        for (int e : eps_flags) s += std::size_t(e);
        return s;
    }
};

// C^{m+|a|} prod_j ||f_j|| theta^{(h-1/2) sum(eps)}
//   * (prod_l (2|a^{(l)}|)!)^{1/4} (t-theta)^{-h(md+2|a|)-(h-1/2-gamma) sum(eps)+m}
//   / Gamma(-h(2md+4|a|)+2(h-1/2-gamma) sum(eps)+2m)^{1/2},
// valid when h < (1/2-gamma)/(d-1+2|a_j|) for every factor j and the Gamma
// argument is positive (the summability regime).
inline double main_estimate_rhs(const BoundParams& p) {
    const std::size_t m = p.m(), d = p.d;
    if (m == 0) throw std::invalid_argument("main_estimate_rhs: need at least one factor");
    if (d == 0) throw std::invalid_argument("main_estimate_rhs: need d >= 1");
    for (const auto& mi : p.alpha)
        if (mi.size() != d)
            throw std::invalid_argument("main_estimate_rhs: each multi-index needs d entries");
    if (p.eps_flags.size() != m)
        throw std::invalid_argument("main_estimate_rhs: need one eps flag per factor");
    for (int e : p.eps_flags)
        if (e != 0 && e != 1)
            throw std::invalid_argument("main_estimate_rhs: eps flags must be 0 or 1");
    if (p.f_norms.size() != m)
        throw std::invalid_argument("main_estimate_rhs: need one norm per factor");
    for (double v : p.f_norms)
        if (!(v > 0.0)) throw std::invalid_argument("main_estimate_rhs: norms must be positive");
    if (!(p.constant > 0.0))
        throw std::invalid_argument("main_estimate_rhs: constant must be positive");
    if (!(p.h > 0.0 && p.h < 0.5))
        throw std::invalid_argument("main_estimate_rhs: need h in (0, 1/2)");
    const double gam = p.gamma_eff();
    if (!(gam > 0.0 && gam < p.h))
        throw std::invalid_argument("main_estimate_rhs: need gamma in (0, h)");
    if (!(p.theta >= 0.0 && p.theta < p.t))
        throw std::invalid_argument("main_estimate_rhs: need 0 <= theta < t");
    const std::size_t se = p.eps_sum();
    if (se > 0 && !(p.theta > 0.0))
        throw std::invalid_argument("main_estimate_rhs: theta must be positive when eps flags are set");

    for (std::size_t j = 0; j < m; ++j) {
        const double den = double(d) - 1.0 + 2.0 * double(p.factor_total(j));
        if (den > 0.0 && !(p.h < (0.5 - gam) / den))
            throw std::domain_error(
                "main_estimate_rhs: regime violated at factor " + std::to_string(j) +
                ": h < (1/2 - gamma)/(d - 1 + 2|alpha_j|) fails");
    }
    const double at = double(p.alpha_total());
    const double md = double(m) * double(d);
    const double arg = -p.h * (2.0 * md + 4.0 * at) + 2.0 * (p.h - 0.5 - gam) * double(se) +
                       2.0 * double(m);
    if (!(arg > 0.0))
        throw std::domain_error(
            "main_estimate_rhs: regime violated: Gamma argument "
            "-h(2md+4|alpha|)+2(h-1/2-gamma)sum(eps)+2m = " +
            std::to_string(arg) + " is not positive");

    double lg = (double(m) + at) * std::log(p.constant);
    for (double v : p.f_norms) lg += std::log(v);
    if (se > 0) lg += (p.h - 0.5) * double(se) * std::log(p.theta);
    for (std::size_t l = 0; l < d; ++l)
        lg += 0.25 * log_gamma(2.0 * double(p.level_sum(l)) + 1.0);
    const double texp = -p.h * (md + 2.0 * at) - (p.h - 0.5 - gam) * double(se) + double(m);
    lg += texp * std::log(p.t - p.theta);
    lg -= 0.5 * log_gamma(arg);
    return std::exp(lg);
}

// ---------------------------------------------------------------------------
// Flow-derivative moment series.

namespace detail {

inline void check_series_inputs(double h, std::size_t d, std::size_t k, std::size_t q) {
    if (!(h > 0.0 && h < 0.5)) throw std::invalid_argument("series_term: need h in (0, 1/2)");
    if (d == 0 || k == 0) throw std::invalid_argument("series_term: need d >= 1 and k >= 1");
    if (q > 30) throw std::invalid_argument("series_term: q budget is 30");
}

} // namespace detail

// Log of the m-th series term (constant and norm prefactors normalized to 1):
//   log of ( (2 * a!)^{1/4} / Gamma(-h(2d 2^q m + 4a) + 2 2^q m)^{1/2} )^{1/2^q}
// with a = 2^q (m+k-1). The factorial prefactor is 2*(a!); the alternative
// bookkeeping ((2a)!)^{1/4} would move the effective convergence threshold to
// 1/(2(d+2)) for every derivative order k, so the scan below reports raw tail
// ratios to keep the distinction visible in the output.
inline double series_term_log(double h, std::size_t d, std::size_t k, std::size_t q,
                              std::size_t m) {
    detail::check_series_inputs(h, d, k, q);
    if (m == 0) throw std::invalid_argument("series_term: need m >= 1");
    const double P = std::ldexp(1.0, int(q));
    const double a = P * double(m + k - 1);
    const double g = -h * (2.0 * double(d) * P * double(m) + 4.0 * a) + 2.0 * P * double(m);
    if (!(g > 0.0))
        throw std::domain_error(
            "series_term: regime violated at m = " + std::to_string(m) +
            ": Gamma argument -h(2d 2^q m + 4 2^q(m+k-1)) + 2 2^q m = " + std::to_string(g) +
            " is not positive");
    return ((std::log(2.0) + log_gamma(a + 1.0)) * 0.25 - 0.5 * log_gamma(g)) / P;
}

inline double series_term(double h, std::size_t d, std::size_t k, std::size_t q, std::size_t m) {
    return std::exp(series_term_log(h, d, k, q, m));
}

// ---------------------------------------------------------------------------
// Summability scan.

enum class SummabilityVerdict { decay, growth, regime_failure };

inline const char* to_string(SummabilityVerdict v) {
    switch (v) {
        case SummabilityVerdict::decay: return "decay";
        case SummabilityVerdict::growth: return "growth";
        default: return "regime_failure";
    }
}

struct SummabilityRow {
    double h = 0.0;
    SummabilityVerdict verdict = SummabilityVerdict::regime_failure;
    double tail_ratio = 0.0;          // term(m_max)/term(m_max-1); NaN on regime failure
    std::size_t last_increase_m = 0;  // largest m with term(m) >= term(m-1); 0 if none
    std::size_t failure_m = 0;        // first m with non-positive Gamma argument; 0 if none
    double analytic_threshold = 0.0;  // 1/(2(d-1+2k))
};

// For each h: "regime_failure" when h >= (1/2 - h/100)/(d-1+2k) (a factor can
// carry up to k derivatives, so the guard uses the worst factor) or when the
// Gamma argument dies at some m <= m_max; otherwise "decay" exactly when the
// log-terms are falling over the whole final tenth of the range and the last
// ratio is below one, else "growth".
inline std::vector<SummabilityRow> summability_scan(std::size_t d, std::size_t k, std::size_t q,
                                                    const std::vector<double>& h_grid,
                                                    std::size_t m_max) {
    detail::check_series_inputs(0.1, d, k, q);
    if (m_max < 20) throw std::invalid_argument("summability_scan: need m_max >= 20");
    const double threshold = 1.0 / (2.0 * (double(d) - 1.0 + 2.0 * double(k)));
    std::vector<SummabilityRow> table;
    table.reserve(h_grid.size());
    for (double h : h_grid) {
        if (!(h > 0.0 && h < 0.5))
            throw std::invalid_argument("summability_scan: grid values must lie in (0, 1/2)");
        SummabilityRow row;
        row.h = h;
        row.analytic_threshold = threshold;
        const double gam = h / 100.0;
        if (!(h < (0.5 - gam) / (double(d) - 1.0 + 2.0 * double(k)))) {
            row.verdict = SummabilityVerdict::regime_failure;
            row.tail_ratio = std::nan("");
            table.push_back(row);
            continue;
        }
        std::vector<double> lt;
        lt.reserve(m_max);
        bool died = false;
        for (std::size_t m = 1; m <= m_max; ++m) {
            try {
                lt.push_back(series_term_log(h, d, k, q, m));
            } catch (const std::domain_error&) {
                row.verdict = SummabilityVerdict::regime_failure;
                row.tail_ratio = std::nan("");
                row.failure_m = m;
                died = true;
                break;
            }
        }
        if (died) {
            table.push_back(row);
            continue;
        }
        std::size_t last_inc = 0;
        for (std::size_t i = 1; i < lt.size(); ++i)
            if (lt[i] >= lt[i - 1]) last_inc = i + 1;
        row.last_increase_m = last_inc;
        row.tail_ratio = std::exp(lt[m_max - 1] - lt[m_max - 2]);
        const bool tail_clean = last_inc * 10 <= m_max * 9;
        row.verdict = (row.tail_ratio < 1.0 && tail_clean) ? SummabilityVerdict::decay
                                                           : SummabilityVerdict::growth;
        table.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Threshold tables, exact in rationals.

struct ThresholdEntry {
    std::string name;
    long long num = 1, den = 1;
    double value() const { return double(num) / double(den); }
};

// Named Hurst thresholds for dimension d: exponential moments, strong
// existence, the Lipschitz-flow condition, and the Sobolev-flow family
// 1/(2(d-1+2k)) for k = 1..6.
inline std::vector<ThresholdEntry> hurst_thresholds(std::size_t d) {
    if (d == 0) throw std::invalid_argument("hurst_thresholds: need d >= 1");
    const long long dd = (long long)d;
    std::vector<ThresholdEntry> out;
    out.push_back({"exp_moment", 1, 2 * (1 + dd)});
    out.push_back({"existence", 1, 2 * (dd + 2)});
    out.push_back({"cg_flow", 1, 2 * (dd + 3)});
    for (long long k = 1; k <= 6; ++k)
        out.push_back({"flow_k" + std::to_string(k), 1, 2 * (dd - 1 + 2 * k)});
    return out;
}

} // namespace sfbm
