#pragma once
// Batches of sampled paths: d components per path, nodes t_0..t_n of a
// TimeGrid, many paths per batch. Storage is [path][node][component].

#include "sfbm/grid.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sfbm {

// Hurst exponent. Values below 1/2 unlock the kernel and Girsanov machinery;
// the samplers accept the whole open interval.
struct HurstParam {
    double h = 0.5;

    HurstParam() = default;
    explicit HurstParam(double h_) : h(h_) {
        if (!(h > 0.0 && h < 1.0))
            throw std::invalid_argument("HurstParam: need h in (0,1)");
    }
    bool strict_low() const { return h < 0.5; }
};

enum class PathKind { wiener, fractional, solution };

// Stream-id domains keep the per-purpose random streams disjoint even when
// the same (seed, path, component) triple shows up in several generators.
namespace stream_domain {
inline constexpr std::uint8_t wiener = 0;
inline constexpr std::uint8_t cholesky = 1;
inline constexpr std::uint8_t circulant = 2;
inline constexpr std::uint8_t sde = 3;
inline constexpr std::uint8_t simplex = 4;
} // namespace stream_domain

struct PathBatch {
    std::size_t dim = 1;
    TimeGrid grid;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    PathKind kind = PathKind::wiener;
    std::vector<double> data;  // count * (n_steps+1) * dim, zero-initialized

    PathBatch() = default;
    PathBatch(std::size_t dim_, const TimeGrid& grid_, std::size_t count_,
              std::uint64_t seed_, PathKind kind_)
        : dim(dim_), grid(grid_), count(count_), seed(seed_), kind(kind_) {
        if (dim < 1) throw std::invalid_argument("PathBatch: need dim >= 1");
        if (count < 1) throw std::invalid_argument("PathBatch: need count >= 1");
        data.assign(count * grid.n_nodes() * dim, 0.0);
    }

    std::size_t n_nodes() const { return grid.n_nodes(); }

    double& at(std::size_t path, std::size_t node, std::size_t comp) {
        return data[(path * n_nodes() + node) * dim + comp];
    }
    double at(std::size_t path, std::size_t node, std::size_t comp) const {
        return data[(path * n_nodes() + node) * dim + comp];
    }

    // Start of one path's contiguous block, length n_nodes()*dim.
    double* path_data(std::size_t path) { return data.data() + path * n_nodes() * dim; }
    const double* path_data(std::size_t path) const {
        return data.data() + path * n_nodes() * dim;
    }
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* who) {
    if (a.n_steps != b.n_steps || a.t_end != b.t_end)
        throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

} // namespace sfbm
