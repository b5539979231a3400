#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fic/image.hpp"

namespace fic {

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RangeBlock {
    std::size_t index = 0;
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t size = 0;
    std::vector<Pixel> pixels;
};

/// Copies the size x size block whose top-left corner is (x, y).
inline std::vector<Pixel> extract_block(const Image& image, std::size_t x, std::size_t y,
                                        std::size_t size) {
    if (x + size > image.width() || y + size > image.height())
        throw GeometryError("block exceeds image bounds");
    std::vector<Pixel> out(size * size);
    auto src = image.pixels();
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
            out[r * size + c] = src[(y + r) * image.width() + x + c];
    return out;
}

inline std::vector<RangeBlock> partition_ranges(const Image& image, std::size_t range_size) {
    if (range_size == 0)
        throw GeometryError("range size must be positive");
    if (image.width() % range_size != 0 || image.height() % range_size != 0)
        throw GeometryError("image " + std::to_string(image.width()) + "x" +
                            std::to_string(image.height()) +
                            " is not divisible by range size " + std::to_string(range_size));
    std::vector<RangeBlock> blocks;
    blocks.reserve((image.width() / range_size) * (image.height() / range_size));
    for (std::size_t y = 0; y < image.height(); y += range_size)
        for (std::size_t x = 0; x < image.width(); x += range_size)
            blocks.push_back({blocks.size(), x, y, range_size, extract_block(image, x, y, range_size)});
    return blocks;
}

// ---------------------------------------------------------------------------
// Domain enumeration

/// Number of top-left positions along one axis for a block of `block` pixels
/// stepping by `stride` inside `extent` pixels.
constexpr std::size_t positions_along(std::size_t extent, std::size_t block, std::size_t stride) {
    return extent < block ? 0 : (extent - block) / stride + 1;
}

/// Non-overlapping 2x2 arithmetic mean, floored. `side` must be even.
inline void downsample_into(const Image& image, std::size_t x, std::size_t y, std::size_t side,
                            std::span<Pixel> out) {
    const std::size_t half = side / 2;
    const std::size_t w = image.width();
    auto src = image.pixels();
    for (std::size_t r = 0; r < half; ++r) {
        const Pixel* row0 = src.data() + (y + 2 * r) * w + x;
        const Pixel* row1 = row0 + w;
        for (std::size_t c = 0; c < half; ++c) {
            const unsigned sum = row0[2 * c] + row0[2 * c + 1] + row1[2 * c] + row1[2 * c + 1];
            out[r * half + c] = static_cast<Pixel>(sum / 4);
        }
    }
}

inline std::vector<Pixel> downsample(std::span<const Pixel> block, std::size_t side) {
    if (side % 2 != 0 || block.size() != side * side)
        throw GeometryError("downsample needs an even-sided square block");
    std::vector<Pixel> out((side / 2) * (side / 2));
    Image tmp(side, side, std::vector<Pixel>(block.begin(), block.end()));
    downsample_into(tmp, 0, 0, side, out);
    return out;
}

/// Read-only view of one enumerated domain block.
struct DomainEntry {
    std::size_t index = 0;
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t size = 0;
    std::size_t stride = 0;
    std::span<const Pixel> down_pixels;
    std::optional<double> fd;
};

/// All overlapping domain blocks of an image, stored column-wise: positions,
/// contiguous downsampled pixels, and optional FD values (NaN = unset).
class DomainPool {
public:
    DomainPool() = default;

    DomainPool(const Image& image, std::size_t domain_size, std::size_t stride)
        : image_width_(image.width()),
          image_height_(image.height()),
          domain_size_(domain_size),
          stride_(stride) {
        if (stride == 0)
            throw GeometryError("stride must be at least 1");
        if (domain_size == 0 || domain_size % 2 != 0)
            throw GeometryError("domain size must be a positive even number");
        if (domain_size > image.width() || domain_size > image.height())
            throw GeometryError("domain size " + std::to_string(domain_size) +
                                " exceeds image " + std::to_string(image.width()) + "x" +
                                std::to_string(image.height()));
        cols_ = positions_along(image.width(), domain_size, stride);
        rows_ = positions_along(image.height(), domain_size, stride);
        const std::size_t n = cols_ * rows_;
        const std::size_t down = down_area();
        down_.resize(n * down);
        fd_.assign(n, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < n; ++i) {
            auto [x, y] = position(i);
            downsample_into(image, x, y, domain_size, std::span<Pixel>(down_.data() + i * down, down));
        }
    }

    std::size_t size() const noexcept { return fd_.size(); }
    bool empty() const noexcept { return fd_.empty(); }
    std::size_t domain_size() const noexcept { return domain_size_; }
    std::size_t down_side() const noexcept { return domain_size_ / 2; }
    std::size_t down_area() const noexcept { return down_side() * down_side(); }
    std::size_t stride() const noexcept { return stride_; }
    std::size_t columns() const noexcept { return cols_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t image_width() const noexcept { return image_width_; }
    std::size_t image_height() const noexcept { return image_height_; }

    std::pair<std::size_t, std::size_t> position(std::size_t index) const {
        return {(index % cols_) * stride_, (index / cols_) * stride_};
    }

    std::span<const Pixel> down_pixels(std::size_t index) const {
        return {down_.data() + index * down_area(), down_area()};
    }

    bool has_fd(std::size_t index) const { return !std::isnan(fd_[index]); }
    double fd(std::size_t index) const { return fd_[index]; }
    void set_fd(std::size_t index, double value) { fd_[index] = value; }
    std::span<const double> fds() const noexcept { return fd_; }

    DomainEntry entry(std::size_t index) const {
        auto [x, y] = position(index);
        std::optional<double> fd;
        if (has_fd(index))
            fd = fd_[index];
        return {index, x, y, domain_size_, stride_, down_pixels(index), fd};
    }

private:
    std::size_t image_width_ = 0;
    std::size_t image_height_ = 0;
    std::size_t domain_size_ = 0;
    std::size_t stride_ = 1;
    std::size_t cols_ = 0;
    std::size_t rows_ = 0;
    std::vector<Pixel> down_;
    std::vector<double> fd_;
};

/// Enumerates every domain_size x domain_size block at multiples of stride,
/// in raster order, with downsampled pixels filled and FD left unset.
inline DomainPool enumerate_domains(const Image& image, std::size_t domain_size, std::size_t stride) {
    return DomainPool(image, domain_size, stride);
}

// ---------------------------------------------------------------------------
// Dihedral isometries
//
// 0 identity, 1/2/3 clockwise rotation by 90/180/270 degrees, 4 horizontal
// flip, 5/6/7 horizontal flip followed by rotation by 90/180/270.

inline constexpr int kIsometryCount = 8;

/// Source coordinate (row, col) that lands at output (row, col) under `iso`.
constexpr std::pair<std::size_t, std::size_t> isometry_source(int iso, std::size_t row,
                                                              std::size_t col, std::size_t n) {
    for (int k = 0; k < (iso & 3); ++k) {
        const std::size_t r = n - 1 - col;
        col = row;
        row = r;
    }
    if (iso & 4)
        col = n - 1 - col;
    return {row, col};
}

constexpr int inverse_isometry(int iso) {
    if (iso == 1)
        return 3;
    if (iso == 3)
        return 1;
    return iso;
}

inline void check_isometry(int iso) {
    if (iso < 0 || iso >= kIsometryCount)
        throw GeometryError("isometry " + std::to_string(iso) + " outside [0,7]");
}

template <typename T>
std::vector<T> apply_isometry(std::span<const T> block, std::size_t side, int iso) {
    check_isometry(iso);
    if (block.size() != side * side)
        throw GeometryError("isometry needs a square block");
    std::vector<T> out(block.size());
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            auto [sr, sc] = isometry_source(iso, r, c, side);
            out[r * side + c] = block[sr * side + sc];
        }
    return out;
}

template <typename T>
std::vector<T> apply_isometry(const std::vector<T>& block, std::size_t side, int iso) {
    return apply_isometry(std::span<const T>(block), side, iso);
}

/// Gather table: out[i] = in[table[i]] realises `iso` on a side x side block.
inline std::vector<std::uint16_t> isometry_table(std::size_t side, int iso) {
    check_isometry(iso);
    std::vector<std::uint16_t> table(side * side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            auto [sr, sc] = isometry_source(iso, r, c, side);
            table[r * side + c] = static_cast<std::uint16_t>(sr * side + sc);
        }
    return table;
}

}  // namespace fic
