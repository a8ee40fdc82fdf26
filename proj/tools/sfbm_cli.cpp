// sfbm: reproducible experiment runner.
//
//   sfbm <subcommand> [key=value ...] [--key value ...]
//
// Parameters come from an optional flat key=value file (config=FILE) with
// command-line pairs overriding it. Every run writes <out>.csv (fixed
// dialect, no wall-clock data, byte-identical for identical config+seed at
// any worker count) and <out>.json (config echo, gate results, wall-clock,
// library version). Exit status: 0 when every gated check passes, 1 on a
// failed gate or a runtime error, 2 on a usage error.

#include "sfbm/sfbm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sfbm;

constexpr double kPi = 3.14159265358979323846;

// Fixed accumulation chunk: chunk boundaries, not the worker count, decide
// every reduction order.
constexpr std::size_t kChunk = 2048;

[[noreturn]] void usage_exit(const std::string& msg) {
    if (!msg.empty()) std::fprintf(stderr, "sfbm: %s\n\n", msg.c_str());
    std::fprintf(stderr,
                 "usage: sfbm <subcommand> [key=value ...] [--key value ...]\n"
                 "\n"
                 "subcommands:\n"
                 "  fbm-check       covariance / Brownian-reduction / marginal-variance gates\n"
                 "  frac-check      fractional integral-derivative inversion gates\n"
                 "  kernel-check    kernel factorization and round-trip gates\n"
                 "  girsanov-check  density identity, mean-weight gate, exponential-moment rows\n"
                 "  skew-sim        mollified occupation-drift SDE summary across widths\n"
                 "  flow-reg        flow-derivative moment table and triangle gates\n"
                 "  shuffle-verify  shuffle counts and simplex-integral residuals\n"
                 "  bound-scan      summability verdicts over a Hurst grid\n"
                 "  thresholds      exact rational Hurst threshold table\n"
                 "\n"
                 "common keys: config=FILE  seed=N  out=PREFIX  workers=N\n"
                 "SFBM_WORKERS sets the default worker count.\n");
    std::exit(2);
}

// ---------------------------------------------------------------------------
// Parameter map.

struct Params {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    std::string str(const std::string& key, const std::string& def) const {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second;
    }
    double real(const std::string& key, double def) const {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        char* end = nullptr;
        const double v = std::strtod(it->second.c_str(), &end);
        if (end == it->second.c_str() || *end != '\0')
            throw std::invalid_argument("parameter " + key + " wants a real, got \"" +
                                        it->second + "\"");
        return v;
    }
    std::size_t integer(const std::string& key, std::size_t def) const {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
        if (end == it->second.c_str() || *end != '\0')
            throw std::invalid_argument("parameter " + key + " wants an integer, got \"" +
                                        it->second + "\"");
        return std::size_t(v);
    }
    std::vector<std::size_t> size_list(const std::string& key,
                                       std::vector<std::size_t> def) const {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        std::vector<std::size_t> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
            if (end == tok.c_str() || *end != '\0')
                throw std::invalid_argument("parameter " + key + " wants integers, got \"" +
                                            tok + "\"");
            out.push_back(std::size_t(v));
        }
        if (out.empty()) throw std::invalid_argument("parameter " + key + " is an empty list");
        return out;
    }
    std::vector<double> real_list(const std::string& key, std::vector<double> def) const {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                throw std::invalid_argument("parameter " + key + " wants reals, got \"" + tok +
                                            "\"");
            out.push_back(v);
        }
        if (out.empty()) throw std::invalid_argument("parameter " + key + " is an empty list");
        return out;
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void load_config_file(const std::string& path, std::map<std::string, std::string>& kv) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = val;
    }
}

// ---------------------------------------------------------------------------
// Run plumbing.

struct Common {
    std::uint64_t seed = 42;
    std::size_t workers = 1;
};

struct RunResult {
    CsvTable csv;
    std::vector<GateResult> gates;
    std::vector<std::pair<std::string, std::string>> extra;  // preformatted JSON
    std::vector<std::string> warnings;
};

GateResult gate(const std::string& name, double value, double tolerance) {
    return {name, value, tolerance, value <= tolerance};
}

double rel_err(double got, double want) {
    const double den = std::fabs(want);
    return den > 0.0 ? std::fabs(got - want) / den : std::fabs(got - want);
}

// ---------------------------------------------------------------------------
// thresholds

RunResult run_thresholds(const Params& p, const Common&) {
    const std::size_t d = p.integer("d", 1);
    RunResult r;
    r.csv.columns = {"name", "numerator", "denominator", "value"};
    for (const auto& e : hurst_thresholds(d))
        r.csv.add_row({e.name, std::to_string(e.num), std::to_string(e.den),
                       format_double(e.value())});
    r.extra.emplace_back("d", json_num(d));
    return r;
}

// ---------------------------------------------------------------------------
// bound-scan

RunResult run_bound_scan(const Params& p, const Common&) {
    const std::size_t d = p.integer("d", 1);
    const std::size_t k = p.integer("k", 1);
    const std::size_t q = p.integer("q", 1);
    const double hmin = p.real("hmin", 0.01);
    const double hmax = p.real("hmax", 0.29);
    const double hstep = p.real("hstep", 0.02);
    const std::size_t mmax = p.integer("mmax", 50);
    if (!(hstep > 0.0) || hmax < hmin)
        throw std::invalid_argument("bound-scan: need hstep > 0 and hmax >= hmin");
    std::vector<double> grid;
    const std::size_t npts = std::size_t(std::floor((hmax - hmin) / hstep + 1.5));
    for (std::size_t j = 0; j < npts; ++j) grid.push_back(hmin + double(j) * hstep);

    const auto table = summability_scan(d, k, q, grid, mmax);

    RunResult r;
    r.csv.columns = {"h",         "verdict",   "tail_ratio",
                     "last_increase_m", "failure_m", "analytic_threshold"};
    auto stage = [](SummabilityVerdict v) {
        return v == SummabilityVerdict::decay ? 0 : v == SummabilityVerdict::growth ? 1 : 2;
    };
    std::size_t regressions = 0;
    double last_decay = std::nan(""), first_fail = std::nan("");
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& row = table[i];
        if (i > 0 && stage(row.verdict) < stage(table[i - 1].verdict)) ++regressions;
        if (row.verdict == SummabilityVerdict::decay) last_decay = row.h;
        if (row.verdict == SummabilityVerdict::regime_failure && std::isnan(first_fail))
            first_fail = row.h;
        r.csv.add_row({format_double(row.h), to_string(row.verdict),
                       format_double(row.tail_ratio), format_size(row.last_increase_m),
                       format_size(row.failure_m), format_double(row.analytic_threshold)});
    }
    r.gates.push_back(gate("verdict_stage_regressions", double(regressions), 0.0));
    r.extra.emplace_back("analytic_threshold",
                         json_num(1.0 / (2.0 * (double(d) - 1.0 + 2.0 * double(k)))));
    r.extra.emplace_back("last_decay_h", json_num(last_decay));
    r.extra.emplace_back("first_regime_failure_h", json_num(first_fail));
    return r;
}

// ---------------------------------------------------------------------------
// frac-check

RunResult run_frac_check(const Params& p, const Common&) {
    const std::size_t n = p.integer("n", 4097);
    const auto alphas = p.real_list("alphas", {0.1, 0.3, 0.45});
    auto f = SampledFunction::sampled(0.0, 1.0, n,
                                      [](double t) { return std::sin(2.0 * kPi * t); });
    RunResult r;
    r.csv.columns = {"alpha", "direction", "rel_l2", "tolerance", "pass"};
    double max_di = 0.0, max_id = 0.0;
    for (double a : alphas) {
        const auto di = rl_derivative_left(a, rl_integral_left(a, f));
        const double e_di = rel_l2_error(di.values, f.values);
        max_di = std::max(max_di, e_di);
        r.csv.add_row({format_double(a), "derivative_of_integral", format_double(e_di),
                       format_double(1e-3), e_di <= 1e-3 ? "1" : "0"});
        const auto id = rl_integral_left(a, rl_derivative_left(a, f));
        const double e_id = rel_l2_error(id.values, f.values);
        max_id = std::max(max_id, e_id);
        r.csv.add_row({format_double(a), "integral_of_derivative", format_double(e_id),
                       format_double(1e-3), e_id <= 1e-3 ? "1" : "0"});
    }
    r.gates.push_back(gate("derivative_of_integral_max_rel", max_di, 1e-3));
    r.gates.push_back(gate("integral_of_derivative_max_rel", max_id, 1e-3));
    return r;
}

// ---------------------------------------------------------------------------
// kernel-check

RunResult run_kernel_check(const Params& p, const Common&) {
    const std::size_t n = p.integer("n", 4097);
    RunResult r;
    r.csv.columns = {"check", "h", "t", "s", "value", "tolerance", "pass"};

    double max_fact = 0.0;
    const std::vector<std::pair<double, double>> pairs = {{0.3, 0.7}, {0.5, 0.5}, {0.9, 0.4}};
    for (double h : {0.1, 0.3}) {
        const HurstParam hp(h);
        for (const auto& [t, s] : pairs) {
            auto prod = [&](double u) { return kh_kernel(hp, t, u) * kh_kernel(hp, s, u); };
            const double quad = integrate_tanh_sinh(prod, 0.0, std::min(t, s), 1e-9);
            const double want = fbm_covariance(hp, t, s);
            const double e = rel_err(quad, want);
            max_fact = std::max(max_fact, e);
            r.csv.add_row({"factorization", format_double(h), format_double(t),
                           format_double(s), format_double(e), format_double(1e-2),
                           e <= 1e-2 ? "1" : "0"});
        }
    }

    // Round trip: the derivative of the operator image is formed by central
    // differences, with the exact limit 0 at the origin.
    const HurstParam hrt(0.3);
    auto psi = SampledFunction::sampled(
        0.0, 1.0, n, [](double u) { return std::sin(kPi * u) * (1.0 + 0.3 * u); });
    auto phi = kh_operator(hrt, psi);
    const double step = phi.step();
    std::vector<double> dphi(n);
    dphi[0] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        dphi[i] = (phi.values[i + 1] - phi.values[i - 1]) / (2.0 * step);
    dphi[n - 1] = (phi.values[n - 1] - phi.values[n - 2]) / step;
    auto back = kh_inverse(hrt, phi, SampledFunction(0.0, 1.0, std::move(dphi)));
    const double e_rt = rel_l2_error(back.values, psi.values);
    r.csv.add_row({"round_trip", format_double(0.3), "", "", format_double(e_rt),
                   format_double(1e-2), e_rt <= 1e-2 ? "1" : "0"});

    r.gates.push_back(gate("factorization_max_rel", max_fact, 1e-2));
    r.gates.push_back(gate("round_trip_rel", e_rt, 1e-2));
    return r;
}

// ---------------------------------------------------------------------------
// fbm-check

RunResult run_fbm_check(const Params& p, const Common& c) {
    const std::size_t count = p.integer("count", 20000);
    const std::size_t ncov = p.integer("ncov", 16);
    const std::size_t nvol = p.integer("nvol", 256);
    const bool bench = p.integer("bench", 1) != 0;
    const std::size_t benchn = p.integer("benchn", 2048);
    RunResult r;
    r.csv.columns = {"check", "h", "t", "s", "value", "tolerance", "pass"};

    // Covariance gate: chunked per-entry moments of B_t B_s, merged in chunk
    // order so the worker count never shows in the result.
    double worst_all = 0.0;
    for (double h : {0.1, 0.25, 0.4}) {
        const HurstParam hp(h);
        const TimeGrid grid(1.0, ncov);
        const std::size_t entries = ncov * (ncov + 1) / 2;
        const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
        std::vector<std::vector<RunningMoments>> slots(n_chunks,
                                                       std::vector<RunningMoments>(entries));
        parallel_chunks(count, kChunk, c.workers, [&](std::size_t ci, std::size_t lo,
                                                      std::size_t hi) {
            auto b = sample_fbm_cholesky(hp, grid, 1, hi - lo, c.seed, lo);
            auto& slot = slots[ci];
            for (std::size_t q = 0; q < hi - lo; ++q) {
                std::size_t e = 0;
                for (std::size_t i = 1; i <= ncov; ++i)
                    for (std::size_t j = i; j <= ncov; ++j, ++e)
                        slot[e].add(b.at(q, i, 0) * b.at(q, j, 0));
            }
        });
        std::vector<RunningMoments> acc(entries);
        for (const auto& slot : slots)
            for (std::size_t e = 0; e < entries; ++e) acc[e].merge(slot[e]);
        double worst = 0.0, worst_t = 0.0, worst_s = 0.0;
        std::size_t e = 0;
        for (std::size_t i = 1; i <= ncov; ++i)
            for (std::size_t j = i; j <= ncov; ++j, ++e) {
                const double want = fbm_covariance(hp, grid.node(i), grid.node(j));
                const double se = acc[e].std_error();
                const double z = std::fabs(acc[e].mean - want) / se;
                if (z > worst) {
                    worst = z;
                    worst_t = grid.node(i);
                    worst_s = grid.node(j);
                }
            }
        worst_all = std::max(worst_all, worst);
        r.csv.add_row({"covariance_max_z", format_double(h), format_double(worst_t),
                       format_double(worst_s), format_double(worst), format_double(5.0),
                       worst <= 5.0 ? "1" : "0"});
    }

    // Brownian reduction of the kernel transform: running sums of the
    // driving increments, compared path by path.
    {
        const TimeGrid grid(1.0, 64);
        auto w = make_wiener_batch(grid, 1, 64, c.seed);
        auto b = sample_fbm_volterra(HurstParam(0.5), grid, w);
        double worst = 0.0;
        for (std::size_t q = 0; q < w.count; ++q)
            for (std::size_t i = 0; i <= grid.n_steps; ++i)
                worst = std::max(worst, std::fabs(b.at(q, i, 0) - w.at(q, i, 0)));
        r.csv.add_row({"volterra_h05_max_abs", format_double(0.5), "", "",
                       format_double(worst), format_double(1e-12), worst <= 1e-12 ? "1" : "0"});
        r.gates.push_back(gate("volterra_h05_max_abs", worst, 1e-12));
    }

    // Marginal variance of the kernel transform at the far end.
    {
        const HurstParam hp(0.2);
        const TimeGrid grid(1.0, nvol);
        const auto vw = volterra_weights(hp, grid);
        const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
        std::vector<RunningMoments> slots(n_chunks);
        parallel_chunks(count, kChunk, c.workers,
                        [&](std::size_t ci, std::size_t lo, std::size_t hi) {
                            auto w = make_wiener_batch(grid, 1, hi - lo, c.seed, lo);
                            auto b = sample_fbm_volterra(vw, w);
                            for (std::size_t q = 0; q < hi - lo; ++q)
                                slots[ci].add(b.at(q, nvol, 0));
                        });
        RunningMoments acc;
        for (const auto& s : slots) acc.merge(s);
        const double dev = std::fabs(acc.variance() - 1.0);  // T = 1, so T^{2h} = 1
        r.csv.add_row({"volterra_variance_dev", format_double(0.2), "", "",
                       format_double(dev), format_double(0.03), dev <= 0.03 ? "1" : "0"});
        r.gates.push_back(gate("volterra_variance_dev", dev, 0.03));
    }
    r.gates.push_back(gate("covariance_max_z", worst_all, 5.0));

    // Throughput comparison, reported (never gated, never in the CSV).
    if (bench) {
        const HurstParam hp(0.25);
        const TimeGrid grid(1.0, benchn);
        const auto t0 = std::chrono::steady_clock::now();
        auto a = sample_fbm_cholesky(hp, grid, 1, 4, c.seed);
        const auto t1 = std::chrono::steady_clock::now();
        auto b = sample_fbm_circulant(hp, grid, 1, 4, c.seed);
        const auto t2 = std::chrono::steady_clock::now();
        const double ms_chol = std::chrono::duration<double, std::milli>(t1 - t0).count();
        const double ms_circ = std::chrono::duration<double, std::milli>(t2 - t1).count();
        r.extra.emplace_back("bench_n", json_num(benchn));
        r.extra.emplace_back("bench_cholesky_ms", json_num(ms_chol));
        r.extra.emplace_back("bench_circulant_ms", json_num(ms_circ));
        r.extra.emplace_back("bench_speedup", json_num(ms_circ > 0.0 ? ms_chol / ms_circ : 0.0));
        // Touch the outputs so the sampler calls cannot be elided.
        if (!(std::isfinite(a.at(0, benchn, 0)) && std::isfinite(b.at(0, benchn, 0))))
            throw std::runtime_error("fbm-check: benchmark produced non-finite samples");
    }
    return r;
}

// ---------------------------------------------------------------------------
// girsanov-check

RunResult run_girsanov_check(const Params& p, const Common& c) {
    const double h = p.real("h", 0.3);
    const std::size_t n = p.integer("n", 256);
    const std::size_t count = p.integer("count", 20000);
    const std::size_t probe_count = p.integer("probecount", 400);
    const std::size_t probe_n = p.integer("proben", 128);
    RunResult r;

    // Brownian reduction: constant drift at h = 1/2 has the classical
    // closed-form density per path.
    {
        const TimeGrid grid(1.0, 128);
        const double cdrift = 0.7;
        auto u = SampledFunction::sampled(0.0, 1.0, grid.n_nodes(),
                                          [&](double) { return cdrift; });
        auto w = make_wiener_batch(grid, 1, 64, c.seed);
        auto xi = girsanov_weight(HurstParam(0.5), {u}, w);
        double worst = 0.0;
        for (std::size_t q = 0; q < w.count; ++q) {
            const double wt = w.at(q, grid.n_steps, 0);
            const double classical = std::exp(-cdrift * wt - 0.5 * cdrift * cdrift * grid.t_end);
            worst = std::max(worst, rel_err(xi[q], classical));
        }
        r.gates.push_back(gate("brownian_reduction_max_rel", worst, 1e-10));
    }

    // Mean weight under the fractional driver: chunked, merged in order.
    {
        const TimeGrid grid(1.0, n);
        auto u = SampledFunction::sampled(0.0, 1.0, grid.n_nodes(),
                                          [](double t) { return 0.5 * std::cos(kPi * t); });
        const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
        std::vector<RunningMoments> slots(n_chunks);
        const HurstParam hp(h);
        parallel_chunks(count, kChunk, c.workers,
                        [&](std::size_t ci, std::size_t lo, std::size_t hi) {
                            auto w = make_wiener_batch(grid, 1, hi - lo, c.seed, lo);
                            auto xi = girsanov_weight(hp, {u}, w);
                            for (double v : xi) slots[ci].add(v);
                        });
        RunningMoments acc;
        for (const auto& s : slots) acc.merge(s);
        const double dev = std::fabs(acc.mean - 1.0);
        r.gates.push_back(gate("mean_weight_dev", dev, 3.0 * acc.std_error()));
        r.extra.emplace_back("mean_weight", json_num(acc.mean));
        r.extra.emplace_back("mean_weight_stderr", json_num(acc.std_error()));
    }

    // Exponential-moment probe rows.
    r.csv.columns = {"eps", "k", "estimate", "stderr", "censored_fraction"};
    const TimeGrid pgrid(1.0, probe_n);
    for (double eps : {0.5, 0.25})
        for (double k : {0.2, 0.4}) {
            const auto est = exp_moment_probe(HurstParam(h), 1, k, eps, {0.0}, probe_count,
                                              pgrid, c.seed);
            r.csv.add_row({format_double(eps), format_double(k), format_double(est.estimate),
                           format_double(est.std_error),
                           format_double(est.censored_fraction)});
        }
    return r;
}

// ---------------------------------------------------------------------------
// skew-sim

RunResult run_skew_sim(const Params& p, const Common& c) {
    const double h = p.real("h", 0.2);
    const std::size_t d = p.integer("d", 1);
    const double alpha = p.real("alpha", 1.0);
    const auto nmoll = p.size_list("nmoll", {4, 8, 16, 32, 64});
    const std::size_t n = p.integer("n", 256);
    const std::size_t count = p.integer("count", 2000);
    const double x0v = p.real("x0", 0.0);

    SkewConfig cfg;
    cfg.alpha = alpha;
    cfg.x0.assign(d, x0v);
    cfg.h = HurstParam(h);
    cfg.grid = TimeGrid(1.0, n);
    cfg.dim = d;

    auto noise = sample_fbm_circulant(cfg.h, cfg.grid, d, count, c.seed);

    RunResult r;
    r.csv.columns = {"n_moll", "eps", "component", "mean", "variance", "cauchy_l2"};

    // Width resolvability: the mollifier must be wider than a typical step.
    const double rms_step = std::pow(cfg.grid.dt(), h);
    std::string unresolved;
    for (std::size_t nm : nmoll)
        if (std::sqrt(1.0 / double(nm)) < 4.0 * rms_step)
            unresolved += (unresolved.empty() ? "" : ",") + std::to_string(nm);
    if (!unresolved.empty())
        r.warnings.push_back("mollifier width below 4x the RMS step displacement (" +
                             format_double(rms_step) + ") at n_moll in {" + unresolved +
                             "}; the drift is under-resolved at this step count");

    std::vector<double> prev_term;
    std::vector<double> cauchy;
    for (std::size_t idx = 0; idx < nmoll.size(); ++idx) {
        cfg.n_moll = nmoll[idx];
        auto sol = solve_skew_mollified(cfg, noise);
        std::vector<double> term(count * d);
        for (std::size_t q = 0; q < count; ++q)
            for (std::size_t comp = 0; comp < d; ++comp)
                term[q * d + comp] = sol.at(q, n, comp);
        std::string cau;
        if (!prev_term.empty()) {
            double acc = 0.0;
            for (std::size_t j = 0; j < term.size(); ++j) {
                const double diff = term[j] - prev_term[j];
                acc += diff * diff;
            }
            cauchy.push_back(std::sqrt(acc / double(count)));
            cau = format_double(cauchy.back());
        }
        for (std::size_t comp = 0; comp < d; ++comp) {
            RunningMoments m;
            for (std::size_t q = 0; q < count; ++q) m.add(term[q * d + comp]);
            r.csv.add_row({format_size(nmoll[idx]), format_double(1.0 / double(nmoll[idx])),
                           format_size(comp), format_double(m.mean),
                           format_double(m.variance()), comp == 0 ? cau : ""});
        }
        prev_term = std::move(term);
    }

    std::size_t violations = 0;
    for (std::size_t j = 1; j < cauchy.size(); ++j)
        if (!(cauchy[j] < cauchy[j - 1])) ++violations;
    r.gates.push_back(gate("cauchy_increase_count", double(violations), 0.0));
    r.extra.emplace_back("rms_step", json_num(rms_step));
    return r;
}

// ---------------------------------------------------------------------------
// flow-reg

RunResult run_flow_reg(const Params& p, const Common& c) {
    const double h = p.real("h", 0.1);
    const std::size_t d = p.integer("d", 1);
    const std::size_t k = p.integer("k", 1);
    const double pw = p.real("p", 2.0);
    const auto nmoll = p.size_list("nmoll", {4, 16, 64, 256});
    const std::size_t n = p.integer("n", 256);
    const std::size_t count = p.integer("count", 2000);
    const double alpha = p.real("alpha", 1.0);

    SkewConfig base;
    base.alpha = alpha;
    base.x0.assign(d, 0.0);
    base.h = HurstParam(h);
    base.grid = TimeGrid(1.0, n);
    base.dim = d;
    std::vector<std::vector<double>> x_grid;
    for (double xv : {-0.5, 0.0, 0.5}) x_grid.push_back(std::vector<double>(d, xv));

    const auto table = moment_table(base, nmoll, pw, k, x_grid, count, c.seed);

    RunResult r;
    r.csv.columns = {"n_moll", "x", "k", "p", "estimate", "stderr"};
    for (const auto& row : table.rows) {
        std::string xs;
        for (std::size_t j = 0; j < row.x.size(); ++j)
            xs += (j ? ";" : "") + format_double(row.x[j]);
        r.csv.add_row({format_size(row.n_moll), xs, format_size(k), format_double(pw),
                       format_double(row.estimate), format_double(row.std_error)});
    }

    std::string sup = "[", ratios = "[";
    for (std::size_t j = 0; j < table.sup_proxy.size(); ++j) {
        sup += (j ? "," : "") + json_num(table.sup_proxy[j]);
        if (j > 0)
            ratios += (j > 1 ? "," : "") +
                      json_num(table.sup_proxy[j] / table.sup_proxy[j - 1]);
    }
    r.extra.emplace_back("sup_proxy", sup + "]");
    r.extra.emplace_back("sup_ratios", ratios + "]");

    // Derivative-method triangle at a fixed pinned configuration.
    {
        const TimeGrid tgrid(1.0, 128);
        SkewConfig tcfg;
        tcfg.alpha = 0.8;
        tcfg.x0.assign(d, 0.0);
        tcfg.h = HurstParam(0.3);
        tcfg.grid = tgrid;
        tcfg.n_moll = 2;
        tcfg.dim = d;
        const DriftSpec b = skew_mollified_drift(tcfg);
        auto noise = sample_fbm_circulant(tcfg.h, tgrid, d, 8, c.seed);
        std::vector<double> x(d, 0.2);
        auto sol = euler_solve(b, x, noise);
        auto jac = variational_jacobian(b, sol);
        auto sv = second_variation(b, sol, jac);

        auto mean_flat = [&](auto&& get, std::size_t len) {
            std::vector<double> m(len, 0.0);
            for (std::size_t q = 0; q < 8; ++q)
                for (std::size_t e = 0; e < len; ++e) m[e] += get(q, e);
            for (double& v : m) v /= 8.0;
            return m;
        };
        auto var1 = mean_flat(
            [&](std::size_t q, std::size_t e) { return jac.at(q, 128, e / d, e % d); }, d * d);
        auto var2 = mean_flat(
            [&](std::size_t q, std::size_t e) {
                return sv.at(q, 128, e / (d * d), (e / d) % d, e % d);
            },
            d * d * d);
        auto fd1 = finite_diff_flow(make_euler_flow(b), x, 1e-4, 1, noise);
        auto fd2 = finite_diff_flow(make_euler_flow(b), x, 1e-2, 2, noise);
        auto rel_frob = [](const std::vector<double>& got, const std::vector<double>& want) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < got.size(); ++j) {
                num += (got[j] - want[j]) * (got[j] - want[j]);
                den += want[j] * want[j];
            }
            return std::sqrt(num / den);
        };
        r.gates.push_back(gate("jacobian_triangle_rel", rel_frob(fd1.value, var1), 1e-3));
        r.gates.push_back(gate("second_variation_triangle_rel", rel_frob(fd2.value, var2),
                               5e-2));
    }
    return r;
}

// ---------------------------------------------------------------------------
// shuffle-verify

RunResult run_shuffle_verify(const Params& p, const Common&) {
    const std::size_t mmax = p.integer("mmax", 3);
    if (mmax < 2) throw std::invalid_argument("shuffle-verify: need mmax >= 2");

    const std::vector<std::function<double(double)>> pool = {
        [](double s) { return 1.0 + 2.0 * s - s * s; },
        [](double s) { return s; },
        [](double s) { return 3.0 + 0.5 * s * s; },
        [](double s) { return -1.0 + s + 2.0 * s * s * s; },
        [](double s) { return 2.0 - 3.0 * s + s * s; }};
    auto pick = [&](std::size_t offset, std::size_t m) {
        std::vector<std::function<double(double)>> out;
        for (std::size_t j = 0; j < m; ++j) out.push_back(pool[(offset + j) % pool.size()]);
        return out;
    };

    RunResult r;
    r.csv.columns = {"kind", "m", "n", "k", "value", "tolerance", "pass"};

    auto binom = [](std::size_t a, std::size_t b) {
        std::size_t v = 1;
        for (std::size_t j = 1; j <= b; ++j) v = v * (a - b + j) / j;
        return v;
    };
    std::size_t count_violations = 0;
    for (std::size_t m = 0; m <= 8; ++m)
        for (std::size_t nn = 0; m + nn <= 8; ++nn) {
            const auto ss = enumerate_shuffles(m, nn);
            const double dev =
                std::fabs(double(ss.permutations.size()) - double(binom(m + nn, m)));
            if (dev != 0.0) ++count_violations;
            r.csv.add_row({"count", format_size(m), format_size(nn), "", format_double(dev),
                           format_double(0.0), dev == 0.0 ? "1" : "0"});
        }

    auto pick_factors = [&](std::size_t offset, std::size_t m) {
        std::vector<Factor> out;
        for (std::size_t j = 0; j < m; ++j) out.push_back({pool[(offset + j) % pool.size()], {}});
        return out;
    };
    const double theta = 0.1, t_end = 1.3;

    double max_shuffle = 0.0;
    for (std::size_t m = 1; m < mmax; ++m)
        for (std::size_t nn = 1; m + nn <= mmax; ++nn) {
            const double res = verify_shuffle_identity(pick(0, m), pick(2, nn), theta, t_end);
            max_shuffle = std::max(max_shuffle, res);
            r.csv.add_row({"shuffle", format_size(m), format_size(nn), "", format_double(res),
                           format_double(1e-8), res <= 1e-8 ? "1" : "0"});
        }

    double max_partial = 0.0;
    for (std::size_t nn = 1; nn <= mmax; ++nn)
        for (std::size_t pp = 0; nn + pp <= mmax; ++pp)
            for (std::size_t kk = 1; kk <= nn; ++kk) {
                const double res = partial_shuffle_residual(pick_factors(1, nn),
                                                            pick_factors(3, pp), kk, theta,
                                                            t_end);
                max_partial = std::max(max_partial, res);
                r.csv.add_row({"partial", format_size(nn), format_size(pp), format_size(kk),
                               format_double(res), format_double(1e-8),
                               res <= 1e-8 ? "1" : "0"});
            }

    r.gates.push_back(gate("count_violations", double(count_violations), 0.0));
    r.gates.push_back(gate("max_shuffle_residual", max_shuffle, 1e-8));
    r.gates.push_back(gate("max_partial_residual", max_partial, 1e-8));
    return r;
}

// ---------------------------------------------------------------------------
// Dispatch.

struct Subcommand {
    const char* name;
    RunResult (*run)(const Params&, const Common&);
    std::set<std::string> keys;
};

const std::vector<Subcommand>& subcommands() {
    static const std::vector<Subcommand> table = {
        {"thresholds", run_thresholds, {"d"}},
        {"bound-scan", run_bound_scan, {"d", "k", "q", "hmin", "hmax", "hstep", "mmax"}},
        {"frac-check", run_frac_check, {"n", "alphas"}},
        {"kernel-check", run_kernel_check, {"n"}},
        {"fbm-check", run_fbm_check, {"count", "ncov", "nvol", "bench", "benchn"}},
        {"girsanov-check", run_girsanov_check, {"h", "n", "count", "probecount", "proben"}},
        {"skew-sim", run_skew_sim, {"h", "d", "alpha", "nmoll", "n", "count", "x0"}},
        {"flow-reg", run_flow_reg, {"h", "d", "k", "p", "nmoll", "n", "count", "alpha"}},
        {"shuffle-verify", run_shuffle_verify, {"mmax"}},
    };
    return table;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) usage_exit("missing subcommand");
    const std::string name = argv[1];
    if (name == "help" || name == "--help" || name == "-h") usage_exit("");

    const Subcommand* sub = nullptr;
    for (const auto& s : subcommands())
        if (name == s.name) sub = &s;
    if (!sub) usage_exit("unknown subcommand \"" + name + "\"");

    // Collect command-line pairs in order; file values load first and are
    // overridden by the command line.
    std::vector<std::pair<std::string, std::string>> cli_pairs;
    for (int i = 2; i < argc; ++i) {
        std::string tok = argv[i];
        std::string key, val;
        if (tok.rfind("--", 0) == 0) {
            tok = tok.substr(2);
            const auto eq = tok.find('=');
            if (eq != std::string::npos) {
                key = tok.substr(0, eq);
                val = tok.substr(eq + 1);
            } else {
                if (i + 1 >= argc) usage_exit("flag --" + tok + " is missing a value");
                key = tok;
                val = argv[++i];
            }
        } else {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                usage_exit("expected key=value or --key value, got \"" + tok + "\"");
            key = tok.substr(0, eq);
            val = tok.substr(eq + 1);
        }
        if (key.empty()) usage_exit("empty parameter name in \"" + std::string(argv[i]) + "\"");
        cli_pairs.emplace_back(key, val);
    }

    Params params;
    try {
        for (const auto& [k, v] : cli_pairs)
            if (k == "config") load_config_file(v, params.kv);
        for (const auto& [k, v] : cli_pairs)
            if (k != "config") params.kv[k] = v;
    } catch (const std::exception& e) {
        usage_exit(e.what());
    }

    // Reject unknown keys before any work runs.
    const std::set<std::string> common_keys = {"seed", "out", "workers"};
    for (const auto& [k, v] : params.kv)
        if (!common_keys.count(k) && !sub->keys.count(k))
            usage_exit("unknown parameter \"" + k + "\" for subcommand " + name);

    try {
        Common common;
        common.seed = std::uint64_t(params.integer("seed", 42));
        common.workers = default_workers(params.integer("workers", 0));
        const std::string out = params.str("out", name);

        const auto t0 = std::chrono::steady_clock::now();
        RunResult r = sub->run(params, common);
        const auto t1 = std::chrono::steady_clock::now();
        const double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

        bool pass = true;
        for (const auto& g : r.gates) pass = pass && g.pass;

        const std::string csv_path = out + ".csv";
        const std::string json_path = out + ".json";
        r.csv.write(csv_path);

        JsonObject doc;
        doc.set("subcommand", json_str(name));
        doc.set("version", json_str(version_string));
        doc.set("seed", json_num(std::size_t(common.seed)));
        doc.set("workers", json_num(common.workers));
        doc.set("config", json_config(params.kv));
        doc.set("gates", json_gates(r.gates));
        for (const auto& [k, v] : r.extra) doc.set(k, v);
        if (!r.warnings.empty()) {
            std::string w = "[";
            for (std::size_t j = 0; j < r.warnings.size(); ++j)
                w += (j ? "," : "") + json_str(r.warnings[j]);
            doc.set("warnings", w + "]");
        }
        doc.set("wall_ms", json_num(wall_ms));
        doc.set("rows", json_num(r.csv.rows.size()));
        doc.set("pass", json_bool(pass));
        write_text(json_path, doc.str());

        for (const auto& w : r.warnings) std::fprintf(stderr, "sfbm %s: warning: %s\n",
                                                      name.c_str(), w.c_str());
        for (const auto& g : r.gates)
            std::printf("%-34s %.6g (tol %.6g) %s\n", g.name.c_str(), g.value, g.tolerance,
                        g.pass ? "pass" : "FAIL");
        std::printf("wrote %s, %s\n", csv_path.c_str(), json_path.c_str());
        std::printf("%s\n", pass ? "PASS" : "FAIL");
        return pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sfbm %s: %s\n", name.c_str(), e.what());
        return 1;
    }
}
