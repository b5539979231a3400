#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fic/code_format.hpp"
#include "fic/codec.hpp"
#include "fic/image.hpp"

namespace fic {

// ---------------------------------------------------------------------------
// Search-space arithmetic

struct SearchCounts {
    std::size_t width = 0;
    std::size_t height = 0;
    std::uint64_t ranges = 0;
    std::uint64_t domains = 0;
    std::uint64_t comparisons = 0;  // exhaustive range x domain x isometry evaluations
};

/// Closed-form counts for exhaustive search; nothing is enumerated.
constexpr SearchCounts search_counts(std::size_t width, std::size_t height, std::size_t range_size = 8,
                                     std::size_t domain_size = 16, std::size_t stride = 1,
                                     int isometries = 1) {
    SearchCounts c;
    c.width = width;
    c.height = height;
    c.ranges = static_cast<std::uint64_t>(width / range_size) * (height / range_size);
    c.domains = static_cast<std::uint64_t>(positions_along(width, domain_size, stride)) *
                positions_along(height, domain_size, stride);
    c.comparisons = c.ranges * c.domains * static_cast<std::uint64_t>(isometries);
    return c;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

/// Diamond-square fractal surface blended with a few hard-edged discs, so the
/// image mixes rough texture with flat regions. Deterministic in `seed`.
inline Image synthetic_image(std::size_t size, std::uint64_t seed, double roughness = 0.55) {
    std::size_t n = 1;
    while (n + 1 < size)
        n *= 2;
    const std::size_t g = n + 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> h(g * g, 0.0);
    auto at = [&](std::size_t x, std::size_t y) -> double& { return h[y * g + x]; };
    at(0, 0) = uni(rng);
    at(n, 0) = uni(rng);
    at(0, n) = uni(rng);
    at(n, n) = uni(rng);
    double amp = 1.0;
    for (std::size_t step = n; step > 1; step /= 2) {
        const std::size_t half = step / 2;
        for (std::size_t y = half; y < g; y += step)
            for (std::size_t x = half; x < g; x += step)
                at(x, y) = (at(x - half, y - half) + at(x + half, y - half) + at(x - half, y + half) +
                            at(x + half, y + half)) / 4.0 + amp * uni(rng);
        for (std::size_t y = 0; y < g; y += half)
            for (std::size_t x = (y / half) % 2 == 0 ? half : 0; x < g; x += step) {
                double sum = 0;
                int k = 0;
                if (x >= half) { sum += at(x - half, y); ++k; }
                if (x + half < g) { sum += at(x + half, y); ++k; }
                if (y >= half) { sum += at(x, y - half); ++k; }
                if (y + half < g) { sum += at(x, y + half); ++k; }
                at(x, y) = sum / k + amp * uni(rng);
            }
        amp *= roughness;
    }
    auto [lo, hi] = std::minmax_element(h.begin(), h.end());
    const double span = std::max(*hi - *lo, 1e-12);

    struct Disc { double cx, cy, r; double v; };
    std::vector<Disc> discs;
    std::uniform_real_distribution<double> pos(0.0, static_cast<double>(size));
    std::uniform_real_distribution<double> rad(static_cast<double>(size) / 16, static_cast<double>(size) / 5);
    std::uniform_real_distribution<double> level(20.0, 235.0);
    for (int i = 0; i < 4; ++i)
        discs.push_back({pos(rng), pos(rng), rad(rng), level(rng)});

    std::vector<Pixel> px(size * size);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            double v = 255.0 * (at(x * n / size, y * n / size) - *lo) / span;
            for (const auto& d : discs) {
                const double dx = static_cast<double>(x) - d.cx;
                const double dy = static_cast<double>(y) - d.cy;
                if (dx * dx + dy * dy <= d.r * d.r)
                    v = 0.3 * v + 0.7 * d.v;
            }
            px[y * size + x] = static_cast<Pixel>(std::clamp(std::lround(v), 0L, 255L));
        }
    return Image(size, size, std::move(px));
}

// ---------------------------------------------------------------------------
// Run records

struct RunRecord {
    std::string image_name;
    std::size_t width = 0;
    std::size_t height = 0;
    Strategy strategy = Strategy::Exhaustive;
    std::size_t stride = 1;
    double encode_seconds = 0.0;
    double fd_overhead_seconds = 0.0;
    std::uint64_t comparisons = 0;
    double mean_pool_size = 0.0;
    std::size_t domain_count = 0;
    std::size_t compressed_bytes = 0;
    double mean_prequant_rms = 0.0;
    double mean_postquant_rms = 0.0;
    std::optional<Psnr> psnr;  // present only when a decode was performed
    int decode_iterations = 0;
};

inline constexpr const char* kCsvHeader =
    "image_name,image_size,strategy,stride,encode_seconds,fd_overhead_seconds,comparisons,"
    "mean_pool_size,domain_count,compressed_bytes,mean_prequant_rms,mean_postquant_rms,psnr_db,"
    "decode_iterations";

inline std::string csv_row(const RunRecord& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os << r.image_name << ',' << r.width << 'x' << r.height << ',' << to_string(r.strategy) << ','
       << r.stride << ',';
    os.precision(6);
    os << r.encode_seconds << ',' << r.fd_overhead_seconds << ',';
    os << r.comparisons << ',';
    os.precision(3);
    os << r.mean_pool_size << ',' << r.domain_count << ',' << r.compressed_bytes << ',';
    os.precision(4);
    os << r.mean_prequant_rms << ',' << r.mean_postquant_rms << ',';
    if (r.psnr)
        os << r.psnr->to_string();
    os << ',' << r.decode_iterations;
    return os.str();
}

inline RunRecord make_run_record(const std::string& name, const EncodeResult& enc,
                                 std::size_t compressed_bytes) {
    RunRecord r;
    r.image_name = name;
    r.width = enc.code.width;
    r.height = enc.code.height;
    r.strategy = enc.code.strategy;
    r.stride = enc.code.stride;
    r.encode_seconds = enc.stats.wall_seconds;
    r.fd_overhead_seconds = enc.stats.fd_overhead_seconds;
    r.comparisons = enc.stats.comparisons;
    r.mean_pool_size = enc.stats.mean_pool_size;
    r.domain_count = enc.stats.domain_count;
    r.compressed_bytes = compressed_bytes;
    r.mean_prequant_rms = enc.stats.mean_prequant_rms();
    r.mean_postquant_rms = enc.stats.mean_postquant_rms();
    return r;
}

// ---------------------------------------------------------------------------
// Corpus benchmark

struct CorpusImage {
    std::string name;
    std::optional<Image> image;
    std::string load_error;  // set when image is absent
};

/// Loads every *.pgm in `dir`, sorted by file name. Unreadable files are
/// kept with their error so the caller can report and skip them.
inline std::vector<CorpusImage> load_corpus(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusImage> out;
    for (const auto& f : files) {
        CorpusImage c;
        c.name = f.stem().string();
        try {
            c.image = load_pgm(f);
        } catch (const std::exception& ex) {
            c.load_error = ex.what();
        }
        out.push_back(std::move(c));
    }
    return out;
}

struct BenchOptions {
    std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
    EncodeParams params;
    int iterations = kDefaultDecodeIterations;
    // Exhaustive search is skipped above this many pixels per side.
    std::size_t exhaustive_max_side = 512;
    bool parallel_corpus = false;
    std::optional<std::filesystem::path> reconstruction_dir;
};

struct BenchFailure {
    std::string image_name;
    std::string message;
};

struct BenchReport {
    std::vector<RunRecord> records;
    std::vector<BenchFailure> failures;
    std::vector<std::string> skipped;  // (image, strategy) pairs deliberately not run
};

inline RunRecord run_one(const std::string& name, const Image& image, Strategy strategy,
                         const BenchOptions& opts) {
    const EncodeResult enc = encode(image, strategy, opts.params);
    const auto bytes = serialize(enc.code);
    RunRecord rec = make_run_record(name, enc, bytes.size());
    const Image decoded = decode(deserialize(bytes), opts.iterations);
    rec.psnr = fidelity(image, decoded).psnr;
    rec.decode_iterations = opts.iterations;
    if (opts.reconstruction_dir)
        save_pgm(decoded, *opts.reconstruction_dir /
                              (name + "_" + std::string(to_string(strategy)) + ".pgm"));
    return rec;
}

/// Encodes, decodes and scores every (image, strategy) pair. Rows come back
/// in corpus order, then strategy order, regardless of parallelism.
inline BenchReport run_bench(const std::vector<CorpusImage>& corpus, const BenchOptions& opts) {
    BenchReport report;
    struct Job { std::size_t image; Strategy strategy; };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus[i].image) {
            report.failures.push_back({corpus[i].name, corpus[i].load_error});
            continue;
        }
        const Image& img = *corpus[i].image;
        for (Strategy s : opts.strategies) {
            if (s == Strategy::Exhaustive &&
                std::max(img.width(), img.height()) > opts.exhaustive_max_side) {
                report.skipped.push_back(corpus[i].name + "/" + std::string(to_string(s)));
                continue;
            }
            jobs.push_back({i, s});
        }
    }

    std::vector<std::optional<RunRecord>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    auto work = [&](std::size_t j) {
        const auto& c = corpus[jobs[j].image];
        try {
            results[j] = run_one(c.name, *c.image, jobs[j].strategy, opts);
        } catch (const std::exception& ex) {
            errors[j] = ex.what();
        }
    };
    detail::parallel_for(jobs.size(), opts.parallel_corpus ? std::max(1u, std::thread::hardware_concurrency()) : 1u,
                         work);

    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (results[j])
            report.records.push_back(std::move(*results[j]));
        else
            report.failures.push_back({corpus[jobs[j].image].name, errors[j]});
    }
    return report;
}

inline void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
    os << kCsvHeader << '\n';
    for (const auto& r : records)
        os << csv_row(r) << '\n';
}

}  // namespace fic
