// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary dataset container for paired transmit/received records.
//
// Layout (little-endian):
//   "FDXD" | u32 version = 1 | u64 sample_count | f64 sample_rate_hz
//   sample_count x { f64 x.re, f64 x.im, f64 y.re, f64 y.im }

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fdsic/error.hpp"
#include "fdsic/signal.hpp"

namespace fdsic {

struct Dataset {
    SignalBuffer x;
    SignalBuffer y;
};

inline constexpr std::array<char, 4> kDatasetMagic{'F', 'D', 'X', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 4 + 4 + 8 + 8;
inline constexpr std::size_t kDatasetRecordBytes = 4 * 8;

namespace detail {

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v, int bytes = 8) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::vector<unsigned char>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(const unsigned char* p, int bytes = 8) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

} // namespace detail

inline std::vector<unsigned char> encode_dataset(const SignalBuffer& x, const SignalBuffer& y) {
    if (x.size() != y.size())
        throw ConfigError("dataset x/y length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    std::vector<unsigned char> out;
    out.reserve(kDatasetHeaderBytes + x.size() * kDatasetRecordBytes);
    out.insert(out.end(), kDatasetMagic.begin(), kDatasetMagic.end());
    detail::put_u64(out, kDatasetVersion, 4);
    detail::put_u64(out, x.size());
    detail::put_f64(out, x.sample_rate_hz);
    for (std::size_t n = 0; n < x.size(); ++n) {
        detail::put_f64(out, x[n].real());
        detail::put_f64(out, x[n].imag());
        detail::put_f64(out, y[n].real());
        detail::put_f64(out, y[n].imag());
    }
    return out;
}

inline Dataset decode_dataset(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kDatasetHeaderBytes) throw FormatError("dataset header truncated");
    if (std::memcmp(bytes.data(), kDatasetMagic.data(), 4) != 0) throw FormatError("dataset has wrong magic (expected FDXD)");
    const auto version = std::uint32_t(detail::get_u64(bytes.data() + 4, 4));
    if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
    const std::uint64_t count = detail::get_u64(bytes.data() + 8);
    const double rate = detail::get_f64(bytes.data() + 16);
    const std::uint64_t payload = bytes.size() - kDatasetHeaderBytes;
    if (count > payload / kDatasetRecordBytes || payload != count * kDatasetRecordBytes)
        throw FormatError("dataset length mismatch: header declares " + std::to_string(count) + " records, payload holds " +
                          std::to_string(payload) + " bytes");

    Dataset d;
    d.x.sample_rate_hz = rate;
    d.y.sample_rate_hz = rate;
    d.x.samples.resize(count);
    d.y.samples.resize(count);
    const unsigned char* p = bytes.data() + kDatasetHeaderBytes;
    for (std::uint64_t n = 0; n < count; ++n, p += kDatasetRecordBytes) {
        d.x.samples[n] = {detail::get_f64(p), detail::get_f64(p + 8)};
        d.y.samples[n] = {detail::get_f64(p + 16), detail::get_f64(p + 24)};
    }
    return d;
}

inline void save_dataset(const SignalBuffer& x, const SignalBuffer& y, const std::string& path) {
    const auto bytes = encode_dataset(x, y);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw IoError("write to '" + path + "' failed");
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_dataset(bytes);
}

} // namespace fdsic
