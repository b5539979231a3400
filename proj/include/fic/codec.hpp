#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "fic/fd_index.hpp"
#include "fic/fractal_dimension.hpp"
#include "fic/geometry.hpp"
#include "fic/image.hpp"

namespace fic {

// ---------------------------------------------------------------------------
// Intensity transform fitting

struct AffineFit {
    double s = 0.0;
    double o = 0.0;
    double rms = 0.0;
};

inline constexpr double kMaxContrast = 1.0;
inline constexpr double kMaxOffset = 255.0;

/// Sufficient statistics of a (domain, range) pair for least-squares fitting.
struct PairSums {
    double n = 0;
    double sd = 0;   // sum d
    double sdd = 0;  // sum d^2
    double sr = 0;   // sum r
    double srr = 0;  // sum r^2
    double sdr = 0;  // sum d*r

    /// Sum of (s*d + o - r)^2 expanded over the sums; never negative.
    double squared_error(double s, double o) const {
        const double e = s * s * sdd + 2.0 * s * o * sd - 2.0 * s * sdr + n * o * o -
                         2.0 * o * sr + srr;
        return std::max(e, 0.0);
    }

    /// Least-squares (s, o) with s clamped to [-1, 1] before o is solved.
    std::pair<double, double> solve(double max_contrast = kMaxContrast) const {
        const double den = n * sdd - sd * sd;
        double s = den == 0.0 ? 0.0 : (n * sdr - sd * sr) / den;
        s = std::clamp(s, -max_contrast, max_contrast);
        return {s, (sr - s * sd) / n};
    }
};

template <typename T, typename U>
PairSums pair_sums(std::span<const T> domain, std::span<const U> range) {
    PairSums p;
    p.n = static_cast<double>(domain.size());
    for (std::size_t i = 0; i < domain.size(); ++i) {
        const double d = static_cast<double>(domain[i]);
        const double r = static_cast<double>(range[i]);
        p.sd += d;
        p.sdd += d * d;
        p.sr += r;
        p.srr += r * r;
        p.sdr += d * r;
    }
    return p;
}

/// Minimises sum (s*d_i + o - r_i)^2 subject to |s| <= 1.
template <typename T, typename U>
AffineFit fit_transform(std::span<const T> domain, std::span<const U> range) {
    if (domain.size() != range.size())
        throw std::invalid_argument("fit_transform: length mismatch");
    if (domain.empty())
        throw std::invalid_argument("fit_transform: empty vectors");
    const PairSums p = pair_sums(domain, range);
    auto [s, o] = p.solve();
    double sq = 0.0;
    for (std::size_t i = 0; i < domain.size(); ++i) {
        const double e = s * static_cast<double>(domain[i]) + o - static_cast<double>(range[i]);
        sq += e * e;
    }
    return {s, o, std::sqrt(sq / p.n)};
}

template <typename T, typename U>
AffineFit fit_transform(const std::vector<T>& domain, const std::vector<U>& range) {
    return fit_transform(std::span<const T>(domain), std::span<const U>(range));
}

// ---------------------------------------------------------------------------
// Quantization: s uniform on [-1, 1] in 5 bits, o uniform on [-255, 255] in 7 bits.

inline constexpr int kContrastBits = 5;
inline constexpr int kOffsetBits = 7;
inline constexpr int kContrastLevels = 1 << kContrastBits;
inline constexpr int kOffsetLevels = 1 << kOffsetBits;
inline constexpr double kContrastStep = 2.0 * kMaxContrast / (kContrastLevels - 1);
inline constexpr double kOffsetStep = 2.0 * kMaxOffset / (kOffsetLevels - 1);

struct QuantizedSo {
    std::uint8_t s_q = 0;
    std::uint8_t o_q = 0;
    friend bool operator==(const QuantizedSo&, const QuantizedSo&) = default;
};

inline std::uint8_t quantize_contrast(double s) {
    if (!(std::abs(s) <= kMaxContrast))
        throw std::out_of_range("contrast outside [-1, 1]");
    const long q = std::lround((s + kMaxContrast) / kContrastStep);
    return static_cast<std::uint8_t>(std::clamp(q, 0L, static_cast<long>(kContrastLevels - 1)));
}

inline std::uint8_t quantize_offset(double o) {
    if (!(std::abs(o) <= kMaxOffset))
        throw std::out_of_range("offset outside [-255, 255]");
    const long q = std::lround((o + kMaxOffset) / kOffsetStep);
    return static_cast<std::uint8_t>(std::clamp(q, 0L, static_cast<long>(kOffsetLevels - 1)));
}

inline double dequantize_contrast(std::uint8_t s_q) { return -kMaxContrast + s_q * kContrastStep; }
inline double dequantize_offset(std::uint8_t o_q) { return -kMaxOffset + o_q * kOffsetStep; }

inline QuantizedSo quantize_so(double s, double o) { return {quantize_contrast(s), quantize_offset(o)}; }

inline std::pair<double, double> dequantize_so(QuantizedSo q) {
    return {dequantize_contrast(q.s_q), dequantize_offset(q.o_q)};
}

// ---------------------------------------------------------------------------
// Code representation

enum class Strategy : std::uint8_t { Exhaustive = 0, NoSearch = 1, Static2 = 2, DynamicFd = 3 };

inline constexpr std::array<Strategy, 4> kAllStrategies = {
    Strategy::Exhaustive, Strategy::NoSearch, Strategy::Static2, Strategy::DynamicFd};

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Exhaustive: return "exhaustive";
        case Strategy::NoSearch: return "nosearch";
        case Strategy::Static2: return "static2";
        case Strategy::DynamicFd: return "dynamic";
    }
    return "unknown";
}

inline Strategy parse_strategy(std::string_view name) {
    if (name == "exhaustive") return Strategy::Exhaustive;
    if (name == "nosearch") return Strategy::NoSearch;
    if (name == "static2") return Strategy::Static2;
    if (name == "dynamic" || name == "dynamic_fd") return Strategy::DynamicFd;
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

struct TransformRecord {
    std::uint32_t range_index = 0;
    std::uint32_t domain_index = 0;
    std::uint8_t isometry = 0;
    std::uint8_t s_q = 0;
    std::uint8_t o_q = 0;

    double contrast() const { return dequantize_contrast(s_q); }
    double offset() const { return dequantize_offset(o_q); }

    friend bool operator==(const TransformRecord&, const TransformRecord&) = default;
};

struct FractalCode {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t range_size = 8;
    std::uint32_t domain_size = 16;
    std::uint32_t stride = 1;
    Strategy strategy = Strategy::Exhaustive;
    bool isometries = false;
    std::vector<TransformRecord> records;

    std::size_t expected_records() const {
        return range_size == 0 ? 0 : (width / range_size) * (height / range_size);
    }

    friend bool operator==(const FractalCode&, const FractalCode&) = default;
};

struct EncodeParams {
    std::size_t range_size = 8;
    std::size_t domain_size = 16;
    std::size_t stride = 1;
    bool isometries = false;
    // Compute domain FD on the downsampled (range-sized) block instead of the
    // original domain block.
    bool fd_on_downsampled = false;
    double max_contrast = kMaxContrast;
    unsigned threads = 1;
};

struct RangeDiagnostics {
    std::uint32_t pool_size = 0;
    double prequant_rms = 0.0;   // best unquantized fit over the pool
    double postquant_rms = 0.0;  // chosen record after quantization
    double range_fd = std::numeric_limits<double>::quiet_NaN();
};

struct EncodeStats {
    Strategy strategy = Strategy::Exhaustive;
    std::uint64_t comparisons = 0;
    double mean_pool_size = 0.0;
    double wall_seconds = 0.0;
    double fd_overhead_seconds = 0.0;
    std::size_t range_count = 0;
    std::size_t domain_count = 0;
    std::optional<FdStats> domain_fd_stats;
    std::vector<RangeDiagnostics> per_range;

    double mean_prequant_rms() const { return mean_of(&RangeDiagnostics::prequant_rms); }
    double mean_postquant_rms() const { return mean_of(&RangeDiagnostics::postquant_rms); }

private:
    double mean_of(double RangeDiagnostics::*field) const {
        if (per_range.empty())
            return 0.0;
        double sum = 0.0;
        for (const auto& r : per_range)
            sum += r.*field;
        return sum / static_cast<double>(per_range.size());
    }
};

struct EncodeResult {
    FractalCode code;
    EncodeStats stats;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Candidate {
    double error = std::numeric_limits<double>::infinity();
    std::uint32_t domain = std::numeric_limits<std::uint32_t>::max();
    std::uint8_t iso = 0;
    QuantizedSo q{};

    bool better_than(const Candidate& other) const {
        if (error != other.error)
            return error < other.error;
        if (domain != other.domain)
            return domain < other.domain;
        return iso < other.iso;
    }
};

/// Per-range search state. The range is stored once per isometry in inverse
/// orientation so that sum(iso(d)_i * r_i) becomes a plain dot product with d.
class RangeMatcher {
public:
    RangeMatcher(std::span<const Pixel> range, std::size_t side, int isometries, double max_contrast)
        : max_contrast_(max_contrast) {
        n_ = static_cast<double>(range.size());
        for (Pixel v : range) {
            sr_ += v;
            srr_ += static_cast<double>(v) * v;
        }
        oriented_.resize(static_cast<std::size_t>(isometries));
        for (int iso = 0; iso < isometries; ++iso) {
            const auto table = isometry_table(side, inverse_isometry(iso));
            auto& dst = oriented_[static_cast<std::size_t>(iso)];
            dst.resize(range.size());
            for (std::size_t i = 0; i < range.size(); ++i)
                dst[i] = range[table[i]];
        }
    }

    int isometries() const { return static_cast<int>(oriented_.size()); }

    /// Scores one domain under every isometry, updating the best quantized
    /// candidate and the best unquantized squared error.
    void score(std::uint32_t domain, std::span<const Pixel> down, double sd, double sdd,
               Candidate& best, double& best_prequant) const {
        PairSums p{n_, sd, sdd, sr_, srr_, 0.0};
        for (std::size_t iso = 0; iso < oriented_.size(); ++iso) {
            const auto& r = oriented_[iso];
            std::uint32_t dot = 0;
            for (std::size_t i = 0; i < r.size(); ++i)
                dot += static_cast<std::uint32_t>(down[i]) * r[i];
            p.sdr = dot;

            auto [s, o] = p.solve(max_contrast_);
            best_prequant = std::min(best_prequant, p.squared_error(s, o));

            Candidate c;
            c.domain = domain;
            c.iso = static_cast<std::uint8_t>(iso);
            c.q.s_q = quantize_contrast(s);
            const double sq = dequantize_contrast(c.q.s_q);
            // Re-solve the offset for the quantized contrast.
            const double oq = std::clamp((p.sr - sq * p.sd) / p.n, -kMaxOffset, kMaxOffset);
            c.q.o_q = quantize_offset(oq);
            c.error = p.squared_error(sq, dequantize_offset(c.q.o_q));
            if (c.better_than(best))
                best = c;
        }
    }

private:
    double max_contrast_ = kMaxContrast;
    double n_ = 0;
    double sr_ = 0;
    double srr_ = 0;
    std::vector<std::vector<std::uint16_t>> oriented_;
};

inline void compute_domain_fds(const Image& image, DomainPool& pool, bool on_downsampled) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (on_downsampled) {
            pool.set_fd(i, dbc_dimension(pool.down_pixels(i), pool.down_side()));
        } else {
            auto [x, y] = pool.position(i);
            const auto block = extract_block(image, x, y, pool.domain_size());
            pool.set_fd(i, dbc_dimension(block, pool.domain_size()));
        }
    }
}

/// Grid-aligned domain whose centre is nearest the range centre.
inline std::uint32_t centred_domain(const DomainPool& pool, std::size_t rx, std::size_t ry,
                                    std::size_t range_size) {
    auto axis = [&](std::size_t r, std::size_t extent, std::size_t count) {
        const long ideal = static_cast<long>(r + range_size / 2) -
                           static_cast<long>(pool.domain_size() / 2);
        const long clipped =
            std::clamp(ideal, 0L, static_cast<long>(extent - pool.domain_size()));
        const long stride = static_cast<long>(pool.stride());
        const long idx = (clipped + stride / 2) / stride;
        return static_cast<std::size_t>(std::min<long>(idx, static_cast<long>(count) - 1));
    };
    const std::size_t col = axis(rx, pool.image_width(), pool.columns());
    const std::size_t row = axis(ry, pool.image_height(), pool.rows());
    return static_cast<std::uint32_t>(row * pool.columns() + col);
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::jthread> workers;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end)
            break;
        workers.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i)
                fn(i);
        });
    }
}

}  // namespace detail

inline void validate_geometry(const Image& image, const EncodeParams& params) {
    if (params.range_size == 0)
        throw GeometryError("range size must be positive");
    if (params.domain_size != 2 * params.range_size)
        throw GeometryError("domain size must be twice the range size");
    if (params.stride == 0)
        throw GeometryError("stride must be at least 1");
    if (image.width() % params.range_size != 0 || image.height() % params.range_size != 0)
        throw GeometryError("image " + std::to_string(image.width()) + "x" +
                            std::to_string(image.height()) + " is not divisible by range size " +
                            std::to_string(params.range_size));
    if (params.domain_size > image.width() || params.domain_size > image.height())
        throw GeometryError("domain size exceeds image");
}

/// Encodes `image` as one quantized affine transform per range block.
///
/// Each range picks, from the strategy's candidate pool, the (domain,
/// isometry) pair with the smallest post-quantization squared error; ties go
/// to the lower domain index, then the lower isometry. Output is identical
/// for any thread count.
inline EncodeResult encode(const Image& image, Strategy strategy, const EncodeParams& params = {}) {
    validate_geometry(image, params);
    const auto start = detail::Clock::now();

    const auto ranges = partition_ranges(image, params.range_size);
    DomainPool pool = enumerate_domains(image, params.domain_size, params.stride);
    if (pool.empty())
        throw GeometryError("no domain blocks fit the image");

    const int isometries = params.isometries ? kIsometryCount : 1;
    const std::size_t nd = pool.size();
    std::vector<double> dom_sum(nd), dom_sq(nd);
    for (std::size_t i = 0; i < nd; ++i) {
        std::uint32_t s = 0, ss = 0;
        for (Pixel v : pool.down_pixels(i)) {
            s += v;
            ss += static_cast<std::uint32_t>(v) * v;
        }
        dom_sum[i] = s;
        dom_sq[i] = ss;
    }

    EncodeStats stats;
    stats.strategy = strategy;
    stats.range_count = ranges.size();
    stats.domain_count = nd;
    stats.per_range.resize(ranges.size());

    // FD classification state (static2 and dynamic only).
    FdIndex index;
    std::vector<double> range_fd;
    std::array<std::vector<std::uint32_t>, 2> halves;
    double split = 0.0;
    if (strategy == Strategy::Static2 || strategy == Strategy::DynamicFd) {
        const auto fd_start = detail::Clock::now();
        detail::compute_domain_fds(image, pool, params.fd_on_downsampled);
        const FdStats fs = fd_stats(pool.fds());
        stats.domain_fd_stats = fs;
        index = build_index(pool);
        range_fd.resize(ranges.size());
        for (std::size_t r = 0; r < ranges.size(); ++r)
            range_fd[r] = dbc_dimension(ranges[r].pixels, params.range_size);
        if (strategy == Strategy::Static2) {
            split = (fs.f_max + fs.f_min) / 2.0;
            for (std::uint32_t i = 0; i < nd; ++i)
                halves[pool.fd(i) < split ? 0 : 1].push_back(i);
        }
        stats.fd_overhead_seconds = detail::seconds_since(fd_start);
    }

    std::vector<TransformRecord> records(ranges.size());
    detail::parallel_for(ranges.size(), params.threads, [&](std::size_t r) {
        const RangeBlock& range = ranges[r];
        const detail::RangeMatcher matcher(range.pixels, range.size, isometries, params.max_contrast);
        detail::Candidate best;
        double best_prequant = std::numeric_limits<double>::infinity();
        std::size_t pool_size = 0;

        auto visit = [&](std::uint32_t d) {
            matcher.score(d, pool.down_pixels(d), dom_sum[d], dom_sq[d], best, best_prequant);
        };
        auto visit_all = [&](std::span<const std::uint32_t> ids) {
            for (std::uint32_t d : ids)
                visit(d);
            pool_size = ids.size();
        };
        auto fallback = [&](double fd) {
            visit(nearest_fd_domain(index, fd));
            pool_size = 1;
        };

        switch (strategy) {
            case Strategy::Exhaustive:
                for (std::uint32_t d = 0; d < nd; ++d)
                    visit(d);
                pool_size = nd;
                break;
            case Strategy::NoSearch:
                visit(detail::centred_domain(pool, range.x, range.y, range.size));
                pool_size = 1;
                break;
            case Strategy::Static2: {
                const auto& half = halves[range_fd[r] < split ? 0 : 1];
                if (half.empty())
                    fallback(range_fd[r]);
                else
                    visit_all(half);
                break;
            }
            case Strategy::DynamicFd: {
                const double d_f = stats.domain_fd_stats->d_f;
                const auto ids = index.range_query(range_fd[r] - d_f, range_fd[r] + d_f);
                if (ids.empty())
                    fallback(range_fd[r]);
                else
                    visit_all(ids);
                break;
            }
        }

        records[r] = {static_cast<std::uint32_t>(r), best.domain, best.iso, best.q.s_q, best.q.o_q};
        auto& diag = stats.per_range[r];
        const double n = static_cast<double>(range.pixels.size());
        diag.pool_size = static_cast<std::uint32_t>(pool_size);
        diag.prequant_rms = std::sqrt(best_prequant / n);
        diag.postquant_rms = std::sqrt(best.error / n);
        if (!range_fd.empty())
            diag.range_fd = range_fd[r];
    });

    std::uint64_t pooled = 0;
    for (const auto& d : stats.per_range)
        pooled += d.pool_size;
    stats.comparisons = pooled * static_cast<std::uint64_t>(isometries);
    stats.mean_pool_size = static_cast<double>(pooled) / static_cast<double>(ranges.size());

    FractalCode code;
    code.width = static_cast<std::uint32_t>(image.width());
    code.height = static_cast<std::uint32_t>(image.height());
    code.range_size = static_cast<std::uint32_t>(params.range_size);
    code.domain_size = static_cast<std::uint32_t>(params.domain_size);
    code.stride = static_cast<std::uint32_t>(params.stride);
    code.strategy = strategy;
    code.isometries = params.isometries;
    code.records = std::move(records);

    stats.wall_seconds = detail::seconds_since(start);
    return {std::move(code), std::move(stats)};
}

// ---------------------------------------------------------------------------
// Decoding

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr Pixel kDefaultInitialIntensity = 128;
inline constexpr int kDefaultDecodeIterations = 10;

inline void validate_code(const FractalCode& code) {
    if (code.width == 0 || code.height == 0 || code.range_size == 0 || code.stride == 0)
        throw DecodeError("decode: degenerate code geometry");
    if (code.domain_size != 2 * code.range_size)
        throw DecodeError("decode: domain size must be twice the range size");
    if (code.width % code.range_size != 0 || code.height % code.range_size != 0)
        throw DecodeError("decode: image not divisible by range size");
    if (code.domain_size > code.width || code.domain_size > code.height)
        throw DecodeError("decode: domain size exceeds image");
    if (code.records.size() != code.expected_records())
        throw DecodeError("decode: record count does not match geometry");
    const std::size_t domains = positions_along(code.width, code.domain_size, code.stride) *
                                positions_along(code.height, code.domain_size, code.stride);
    for (const auto& rec : code.records) {
        if (rec.domain_index >= domains)
            throw DecodeError("decode: record references domain " +
                              std::to_string(rec.domain_index) + " outside the " +
                              std::to_string(domains) + " available");
        if (rec.isometry >= kIsometryCount)
            throw DecodeError("decode: isometry out of range");
        if (rec.s_q >= kContrastLevels || rec.o_q >= kOffsetLevels)
            throw DecodeError("decode: quantized coefficient out of range");
    }
}

/// One application of the code's transforms to `current`, into a fresh image.
inline Image decode_step(const FractalCode& code, const Image& current) {
    const std::size_t w = code.width;
    const std::size_t rs = code.range_size;
    const std::size_t cols = positions_along(code.width, code.domain_size, code.stride);
    const std::size_t ranges_per_row = w / rs;

    std::array<std::vector<std::uint16_t>, kIsometryCount> tables;
    for (int iso = 0; iso < kIsometryCount; ++iso)
        tables[static_cast<std::size_t>(iso)] = isometry_table(rs, iso);

    std::vector<Pixel> out(current.size());
    std::vector<Pixel> down(rs * rs);
    for (std::size_t r = 0; r < code.records.size(); ++r) {
        const TransformRecord& rec = code.records[r];
        const std::size_t dx = (rec.domain_index % cols) * code.stride;
        const std::size_t dy = (rec.domain_index / cols) * code.stride;
        downsample_into(current, dx, dy, code.domain_size, down);
        const double s = rec.contrast();
        const double o = rec.offset();
        const auto& table = tables[rec.isometry];
        const std::size_t rx = (r % ranges_per_row) * rs;
        const std::size_t ry = (r / ranges_per_row) * rs;
        for (std::size_t i = 0; i < rs * rs; ++i) {
            const double v = std::clamp(s * down[table[i]] + o, 0.0, 255.0);
            out[(ry + i / rs) * w + rx + i % rs] = static_cast<Pixel>(std::lround(v));
        }
    }
    return Image(code.width, code.height, std::move(out));
}

/// Iterates the code's transforms `iterations` times starting from `initial`
/// (uniform mid-gray when absent).
inline Image decode(const FractalCode& code, int iterations = kDefaultDecodeIterations,
                    const std::optional<Image>& initial = std::nullopt) {
    if (iterations < 1)
        throw std::invalid_argument("decode: iterations must be at least 1");
    validate_code(code);
    Image current = initial ? *initial : Image::filled(code.width, code.height, kDefaultInitialIntensity);
    if (current.width() != code.width || current.height() != code.height)
        throw DecodeError("decode: initial image dimensions differ from the code");
    for (int k = 0; k < iterations; ++k)
        current = decode_step(code, current);
    return current;
}

}  // namespace fic
