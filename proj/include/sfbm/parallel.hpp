#pragma once
// Deterministic parallelism: work splits into fixed-size chunks whose
// results land in chunk-indexed slots and are reduced in chunk order, so
// every numeric output is independent of the worker count. Reductions that
// cannot be chunked use pairwise summation with a shape fixed by the length.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sfbm {

// Worker count resolution: explicit request wins, else SFBM_WORKERS, else 1.
inline std::size_t default_workers(std::size_t requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SFBM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw std::invalid_argument("SFBM_WORKERS must be a positive integer, got \"" +
                                        std::string(env) + "\"");
        return std::size_t(v);
    }
    return 1;
}

// Calls fn(chunk_index, begin, end) for every chunk of the range [0, total).
// Chunk boundaries depend only on (total, chunk_size); workers claim chunks
// through a shared counter, so fn must write only to state owned by its
// chunk index (or be otherwise commutative-safe).
template <typename Fn>
void parallel_chunks(std::size_t total, std::size_t chunk_size, std::size_t workers, Fn&& fn) {
    if (chunk_size == 0) throw std::invalid_argument("parallel_chunks: chunk size must be positive");
    if (total == 0) return;
    const std::size_t n_chunks = (total + chunk_size - 1) / chunk_size;
    if (workers == 0) workers = 1;
    if (workers == 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto drain = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            try {
                fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t spawned = std::min(workers, n_chunks) - 1;
    pool.reserve(spawned);
    for (std::size_t w = 0; w < spawned; ++w) pool.emplace_back(drain);
    drain();
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(failure);
}

// Pairwise summation; the reduction tree depends only on n.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = v[0];
        for (std::size_t i = 1; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// Streaming mean/variance cell with a mergeable update (Chan). The merged
// result depends on the chunk boundaries, never on which worker ran a
// chunk, so a fixed chunk size plus in-order merging gives worker-invariant
// statistics.
struct RunningMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / double(n);
        m2 += delta * (x - mean);
    }
    void merge(const RunningMoments& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double delta = o.mean - mean;
        const double total = double(n + o.n);
        const double new_mean = mean + delta * double(o.n) / total;
        m2 += o.m2 + delta * delta * double(n) * double(o.n) / total;
        mean = new_mean;
        n += o.n;
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double std_error() const {
        return n > 1 ? std::sqrt(m2 / double(n - 1) / double(n)) : 0.0;
    }
};

} // namespace sfbm
