#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fic {

using Pixel = std::uint8_t;

/// Row-major 8-bit grayscale raster.
class Image {
public:
    Image() = default;

    Image(std::size_t width, std::size_t height, std::vector<Pixel> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (width_ == 0 || height_ == 0)
            throw std::invalid_argument("image dimensions must be positive");
        if (pixels_.size() != width_ * height_)
            throw std::invalid_argument("pixel count does not match width*height");
    }

    static Image filled(std::size_t width, std::size_t height, Pixel value) {
        return Image(width, height, std::vector<Pixel>(width * height, value));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    Pixel at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
    std::span<const Pixel> pixels() const noexcept { return pixels_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<Pixel> pixels_;
};

// ---------------------------------------------------------------------------
// PGM I/O

enum class PgmErrorKind { Io, Malformed, UnsupportedMaxval, Truncated };

class PgmError : public std::runtime_error {
public:
    PgmError(PgmErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    PgmErrorKind kind() const noexcept { return kind_; }

private:
    PgmErrorKind kind_;
};

namespace detail {

class PgmScanner {
public:
    explicit PgmScanner(std::string data) : data_(std::move(data)) {}

    // Skips whitespace and '#' comments, then reads one token.
    std::string token() {
        skip_space_and_comments();
        std::size_t start = pos_;
        while (pos_ < data_.size() && !is_space(data_[pos_]) && data_[pos_] != '#')
            ++pos_;
        return data_.substr(start, pos_ - start);
    }

    unsigned long number(const char* field) {
        std::string tok = token();
        if (tok.empty())
            throw PgmError(PgmErrorKind::Truncated,
                           std::string("pgm: unexpected end of data reading ") + field);
        unsigned long value = 0;
        for (char c : tok) {
            if (c < '0' || c > '9')
                throw PgmError(PgmErrorKind::Malformed,
                               std::string("pgm: non-numeric ") + field + " '" + tok + "'");
            value = value * 10 + static_cast<unsigned long>(c - '0');
            if (value > 0xFFFFFFFFul)
                throw PgmError(PgmErrorKind::Malformed, std::string("pgm: ") + field + " too large");
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from binary raster data.
    void single_whitespace() {
        if (pos_ >= data_.size())
            throw PgmError(PgmErrorKind::Truncated, "pgm: missing raster data");
        if (!is_space(data_[pos_]))
            throw PgmError(PgmErrorKind::Malformed, "pgm: expected whitespace after maxval");
        ++pos_;
    }

    std::size_t position() const noexcept { return pos_; }
    const std::string& data() const noexcept { return data_; }

private:
    static bool is_space(char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            if (is_space(data_[pos_])) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a P2 or P5 PGM held in memory. Pixel values are kept as stored,
/// without rescaling for maxval < 255.
inline Image parse_pgm(std::string data) {
    detail::PgmScanner in(std::move(data));
    const std::string magic = in.token();
    if (magic != "P5" && magic != "P2")
        throw PgmError(PgmErrorKind::Malformed, "pgm: bad magic '" + magic + "'");
    const bool binary = magic == "P5";

    const auto width = in.number("width");
    const auto height = in.number("height");
    const auto maxval = in.number("maxval");
    if (width == 0 || height == 0)
        throw PgmError(PgmErrorKind::Malformed, "pgm: zero image dimension");
    if (maxval == 0)
        throw PgmError(PgmErrorKind::Malformed, "pgm: maxval must be positive");
    if (maxval > 255)
        throw PgmError(PgmErrorKind::UnsupportedMaxval,
                       "pgm: unsupported maxval " + std::to_string(maxval));

    const std::size_t count = static_cast<std::size_t>(width) * height;
    std::vector<Pixel> pixels(count);
    if (binary) {
        in.single_whitespace();
        const std::size_t start = in.position();
        if (in.data().size() - start < count)
            throw PgmError(PgmErrorKind::Truncated,
                           "pgm: truncated raster, expected " + std::to_string(count) +
                               " bytes, found " + std::to_string(in.data().size() - start));
        for (std::size_t i = 0; i < count; ++i) {
            auto v = static_cast<unsigned char>(in.data()[start + i]);
            if (v > maxval)
                throw PgmError(PgmErrorKind::Malformed, "pgm: sample exceeds maxval");
            pixels[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            auto v = in.number("sample");
            if (v > maxval)
                throw PgmError(PgmErrorKind::Malformed, "pgm: sample exceeds maxval");
            pixels[i] = static_cast<Pixel>(v);
        }
    }
    return Image(width, height, std::move(pixels));
}

inline Image load_pgm(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file)
        throw PgmError(PgmErrorKind::Io, "pgm: cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_pgm(std::move(buffer).str());
}

inline std::string encode_pgm(const Image& image) {
    std::string out = "P5\n" + std::to_string(image.width()) + " " +
                      std::to_string(image.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels().data()), image.size());
    return out;
}

/// Writes binary P5.
inline void save_pgm(const Image& image, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file)
        throw PgmError(PgmErrorKind::Io, "pgm: cannot open '" + path.string() + "' for writing");
    const std::string bytes = encode_pgm(image);
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file)
        throw PgmError(PgmErrorKind::Io, "pgm: write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Fidelity

/// PSNR in decibels with an explicit infinite state for identical images.
class Psnr {
public:
    static Psnr infinite() noexcept { return Psnr(); }
    static Psnr decibels(double db) noexcept { return Psnr(db); }

    bool is_infinite() const noexcept { return infinite_; }
    double value() const {
        if (infinite_)
            throw std::logic_error("psnr is infinite");
        return db_;
    }
    std::string to_string() const {
        if (infinite_)
            return "inf";
        std::ostringstream os;
        os.precision(4);
        os << std::fixed << db_;
        return os.str();
    }

    friend bool operator==(const Psnr&, const Psnr&) = default;

private:
    Psnr() = default;
    explicit Psnr(double db) : db_(db), infinite_(false) {}

    double db_ = 0.0;
    bool infinite_ = true;
};

struct FidelityReport {
    double mse = 0.0;
    double rms = 0.0;
    Psnr psnr = Psnr::infinite();
};

inline constexpr double kPeakIntensity = 255.0;

inline Psnr psnr_from_mse(double mse) {
    if (mse == 0.0)
        return Psnr::infinite();
    return Psnr::decibels(10.0 * std::log10(kPeakIntensity * kPeakIntensity / mse));
}

inline FidelityReport fidelity(const Image& original, const Image& reconstructed) {
    if (original.width() != reconstructed.width() || original.height() != reconstructed.height())
        throw std::invalid_argument("fidelity: image dimensions differ");
    auto a = original.pixels();
    auto b = reconstructed.pixels();
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(a[i]) - b[i];
        sum += static_cast<std::uint64_t>(d * d);
    }
    FidelityReport report;
    report.mse = static_cast<double>(sum) / static_cast<double>(a.size());
    report.rms = std::sqrt(report.mse);
    report.psnr = psnr_from_mse(report.mse);
    return report;
}

}  // namespace fic
