#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fic/image.hpp"

namespace fic {

inline constexpr double kMinFd = 2.0;
inline constexpr double kMaxFd = 3.0;

struct DbcEstimate {
    double dimension = kMinFd;  // clamped to [2, 3]
    double raw = kMinFd;        // least-squares slope before clamping
};

/// Box sides used for a block of side M: powers of two s with 2 <= s <= M/2
/// that divide M.
inline std::vector<std::size_t> dbc_scales(std::size_t side) {
    std::vector<std::size_t> scales;
    for (std::size_t s = 2; s <= side / 2; s *= 2)
        if (side % s == 0)
            scales.push_back(s);
    return scales;
}

/// Box count N_r for one grid scale: sum over s x s cells of
/// floor(max/h) - floor(min/h) + 1 with h = s * gray_levels / M.
inline double dbc_box_count(std::span<const Pixel> block, std::size_t side, std::size_t s,
                            int gray_levels = 256) {
    const double h = static_cast<double>(s) * gray_levels / static_cast<double>(side);
    double total = 0.0;
    for (std::size_t cy = 0; cy < side; cy += s)
        for (std::size_t cx = 0; cx < side; cx += s) {
            Pixel lo = 255, hi = 0;
            for (std::size_t r = cy; r < cy + s; ++r)
                for (std::size_t c = cx; c < cx + s; ++c) {
                    const Pixel v = block[r * side + c];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            total += std::floor(hi / h) - std::floor(lo / h) + 1.0;
        }
    return total;
}

/// Differential box-counting fractal dimension of a square block.
inline DbcEstimate dbc_estimate(std::span<const Pixel> block, std::size_t side,
                                int gray_levels = 256) {
    if (side * side != block.size())
        throw std::invalid_argument("dbc: block is not square");
    if (gray_levels < 2)
        throw std::invalid_argument("dbc: gray_levels must be at least 2");
    const auto scales = dbc_scales(side);
    if (side < 4 || scales.size() < 2)
        throw std::invalid_argument("dbc: block of side " + std::to_string(side) +
                                    " is too small for two box scales");

    // Slope of log(N_r) against log(1/r), r = s / M.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t s : scales) {
        const double x = std::log(static_cast<double>(side) / static_cast<double>(s));
        const double y = std::log(dbc_box_count(block, side, s, gray_levels));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(scales.size());
    DbcEstimate est;
    est.raw = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    est.dimension = std::clamp(est.raw, kMinFd, kMaxFd);
    return est;
}

inline double dbc_dimension(std::span<const Pixel> block, std::size_t side, int gray_levels = 256) {
    return dbc_estimate(block, side, gray_levels).dimension;
}

struct FdStats {
    double f_max = 0.0;
    double f_min = 0.0;
    double d_f = 0.0;  // fractal distance (f_max - f_min) / 3
};

inline FdStats fd_stats(std::span<const double> fds) {
    if (fds.empty())
        throw std::invalid_argument("fd_stats: empty input");
    auto [lo, hi] = std::minmax_element(fds.begin(), fds.end());
    return {*hi, *lo, (*hi - *lo) / 3.0};
}

}  // namespace fic
