#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fic/codec.hpp"

// Compressed file layout, all integers little-endian:
//
//   offset  size  field
//        0     4  magic "FIC1"
//        4     1  version (1)
//        5     1  strategy id
//        6     2  width
//        8     2  height
//       10     1  range size
//       11     1  domain size
//       12     1  stride
//       13     1  flags (bit 0: isometries enabled)
//       14     4  record count
//       18        records: domain index u32, isometry u8, s_q u8, o_q u8

namespace fic {

inline constexpr std::array<std::uint8_t, 4> kCodeMagic = {'F', 'I', 'C', '1'};
inline constexpr std::uint8_t kCodeVersion = 1;
inline constexpr std::size_t kCodeHeaderBytes = 18;
inline constexpr std::size_t kCodeRecordBytes = 7;

enum class FormatErrorKind { BadMagic, VersionMismatch, Truncated, RecordCountMismatch, Invalid, Io };

class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
    return static_cast<T>(v);
}

inline void require_fits(std::uint64_t value, std::uint64_t max, const char* field) {
    if (value > max)
        throw FormatError(FormatErrorKind::Invalid,
                          std::string("serialize: ") + field + " " + std::to_string(value) +
                              " does not fit the format");
}

}  // namespace detail

inline std::size_t serialized_size(const FractalCode& code) {
    return kCodeHeaderBytes + code.records.size() * kCodeRecordBytes;
}

inline std::vector<std::uint8_t> serialize(const FractalCode& code) {
    detail::require_fits(code.width, 0xFFFF, "width");
    detail::require_fits(code.height, 0xFFFF, "height");
    detail::require_fits(code.range_size, 0xFF, "range size");
    detail::require_fits(code.domain_size, 0xFF, "domain size");
    detail::require_fits(code.stride, 0xFF, "stride");
    detail::require_fits(code.records.size(), 0xFFFFFFFFu, "record count");

    std::vector<std::uint8_t> out;
    out.reserve(serialized_size(code));
    out.insert(out.end(), kCodeMagic.begin(), kCodeMagic.end());
    out.push_back(kCodeVersion);
    out.push_back(static_cast<std::uint8_t>(code.strategy));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(code.width));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(code.height));
    out.push_back(static_cast<std::uint8_t>(code.range_size));
    out.push_back(static_cast<std::uint8_t>(code.domain_size));
    out.push_back(static_cast<std::uint8_t>(code.stride));
    out.push_back(code.isometries ? 1 : 0);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(code.records.size()));
    for (const auto& rec : code.records) {
        detail::put_le<std::uint32_t>(out, rec.domain_index);
        out.push_back(rec.isometry);
        out.push_back(rec.s_q);
        out.push_back(rec.o_q);
    }
    return out;
}

inline FractalCode deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kCodeMagic.size() ||
        !std::equal(kCodeMagic.begin(), kCodeMagic.end(), bytes.begin()))
        throw FormatError(FormatErrorKind::BadMagic, "code: bad magic");
    if (bytes.size() < kCodeHeaderBytes)
        throw FormatError(FormatErrorKind::Truncated, "code: truncated header");
    if (bytes[4] != kCodeVersion)
        throw FormatError(FormatErrorKind::VersionMismatch,
                          "code: unsupported version " + std::to_string(bytes[4]));
    if (bytes[5] > static_cast<std::uint8_t>(Strategy::DynamicFd))
        throw FormatError(FormatErrorKind::Invalid,
                          "code: unknown strategy id " + std::to_string(bytes[5]));

    FractalCode code;
    code.strategy = static_cast<Strategy>(bytes[5]);
    code.width = detail::get_le<std::uint16_t>(bytes, 6);
    code.height = detail::get_le<std::uint16_t>(bytes, 8);
    code.range_size = bytes[10];
    code.domain_size = bytes[11];
    code.stride = bytes[12];
    code.isometries = (bytes[13] & 1) != 0;
    const auto count = detail::get_le<std::uint32_t>(bytes, 14);

    if (code.range_size == 0 || code.width % code.range_size != 0 ||
        code.height % code.range_size != 0)
        throw FormatError(FormatErrorKind::Invalid, "code: geometry not divisible by range size");
    if (count != code.expected_records())
        throw FormatError(FormatErrorKind::RecordCountMismatch,
                          "code: record count " + std::to_string(count) + " but geometry needs " +
                              std::to_string(code.expected_records()));
    const std::size_t need = kCodeHeaderBytes + static_cast<std::size_t>(count) * kCodeRecordBytes;
    if (bytes.size() < need)
        throw FormatError(FormatErrorKind::Truncated,
                          "code: truncated records, expected " + std::to_string(need) +
                              " bytes, found " + std::to_string(bytes.size()));
    if (bytes.size() > need)
        throw FormatError(FormatErrorKind::Invalid, "code: trailing bytes after records");

    code.records.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t at = kCodeHeaderBytes + i * kCodeRecordBytes;
        auto& rec = code.records[i];
        rec.range_index = i;
        rec.domain_index = detail::get_le<std::uint32_t>(bytes, at);
        rec.isometry = bytes[at + 4];
        rec.s_q = bytes[at + 5];
        rec.o_q = bytes[at + 6];
    }
    return code;
}

inline void write_code(const FractalCode& code, const std::filesystem::path& path) {
    const auto bytes = serialize(code);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file)
        throw FormatError(FormatErrorKind::Io, "code: cannot open '" + path.string() + "' for writing");
    file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!file)
        throw FormatError(FormatErrorKind::Io, "code: write failed for '" + path.string() + "'");
}

inline FractalCode read_code(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file)
        throw FormatError(FormatErrorKind::Io, "code: cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace fic
