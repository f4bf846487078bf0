// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file weights_memory.hpp
 * @brief Bit-packed weights and biases memories of a PE array.
 *
 * A memory word is `fields` Q-bit two's-complement fields; field p occupies
 * bits [p Q, (p+1) Q). Word m of a stage's weights memory is read in compute
 * cycle m and field p feeds PE p with the weight StageGeometry::slot(m, p)
 * addresses. For NBN with k = N_PE / N_I that is neuron m k + p / N_I,
 * input p % N_I.
 *
 * Bias words: NBN stores N_n / k words of k fields (word m holds neurons
 * m k .. m k + k - 1), IBI stores one word of N_n fields.
 *
 * Complex PE arrays use two fields per PE: 2p holds the real part and
 * 2p + 1 the imaginary part.
 *
 * Image file:
 *
 *     NPE=<fields> Q=<q> WORDS=<w>
 *     <hex word 0>
 *     ...
 *
 * Each word is written most significant digit first, zero padded to
 * ceil(fields Q / 4) digits.
 */

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fdsic/arith.hpp"
#include "fdsic/error.hpp"
#include "fdsic/kernels.hpp"
#include "fdsic/pipeline/geometry.hpp"

namespace fdsic {

/// Arbitrary-width bit vector, little-endian 64-bit limbs.
class BitWord {
public:
    BitWord() = default;
    explicit BitWord(int width) : width_(width), limbs_(static_cast<std::size_t>((width + 63) / 64)) {
        if (width < 0) throw ConfigError("negative word width");
    }

    int width() const { return width_; }

    bool bit(int i) const { return (limbs_[std::size_t(i / 64)] >> (i % 64)) & 1u; }
    void set_bit(int i, bool v) {
        const std::uint64_t m = std::uint64_t{1} << (i % 64);
        auto& l = limbs_[std::size_t(i / 64)];
        l = v ? (l | m) : (l & ~m);
    }

    /// Sign-extended Q-bit field p.
    std::int64_t field(int p, int q) const {
        const int lo = p * q;
        if (p < 0 || q < 1 || q > 63 || lo + q > width_) throw ConfigError("field out of range");
        const int li = lo / 64, sh = lo % 64;
        std::uint64_t u = limbs_[std::size_t(li)] >> sh;
        if (sh + q > 64) u |= limbs_[std::size_t(li + 1)] << (64 - sh);
        u &= mask(q);
        if ((u >> (q - 1)) & 1u) u |= ~mask(q);
        return std::int64_t(u);
    }

    void set_field(int p, int q, std::int64_t raw) {
        const int lo = p * q;
        if (p < 0 || q < 1 || q > 63 || lo + q > width_) throw ConfigError("field out of range");
        const std::int64_t lim = std::int64_t{1} << (q - 1);
        if (raw < -lim || raw >= lim) throw ConfigError("value " + std::to_string(raw) + " does not fit in " + std::to_string(q) + " bits");
        const std::uint64_t u = std::uint64_t(raw) & mask(q);
        const int li = lo / 64, sh = lo % 64;
        auto& a = limbs_[std::size_t(li)];
        a = (a & ~(mask(q) << sh)) | (u << sh);
        if (sh + q > 64) {
            auto& b = limbs_[std::size_t(li + 1)];
            const int spill = sh + q - 64;
            b = (b & ~mask(spill)) | (u >> (64 - sh));
        }
    }

    std::string to_hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        const int n = (width_ + 3) / 4;
        std::string s(std::size_t(n), '0');
        for (int d = 0; d < n; ++d) {
            int v = 0;
            for (int b = 0; b < 4; ++b)
                if (4 * d + b < width_ && bit(4 * d + b)) v |= 1 << b;
            s[std::size_t(n - 1 - d)] = digits[v];
        }
        return s;
    }

    static BitWord from_hex(std::string_view hex, int width) {
        BitWord w(width);
        if (int(hex.size()) != (width + 3) / 4)
            throw FormatError("memory word '" + std::string(hex) + "' should have " + std::to_string((width + 3) / 4) + " hex digits");
        const int n = int(hex.size());
        for (int d = 0; d < n; ++d) {
            const char c = hex[std::size_t(n - 1 - d)];
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else throw FormatError(std::string("invalid hex digit '") + c + "'");
            for (int b = 0; b < 4; ++b) {
                const bool on = (v >> b) & 1;
                if (4 * d + b < width) w.set_bit(4 * d + b, on);
                else if (on) throw FormatError("memory word exceeds " + std::to_string(width) + " bits");
            }
        }
        return w;
    }

    friend bool operator==(const BitWord&, const BitWord&) = default;

private:
    static constexpr std::uint64_t mask(int bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

    int width_ = 0;
    std::vector<std::uint64_t> limbs_;
};

/// A memory of equally wide words made of Q-bit fields.
struct FieldMemory {
    int fields = 1;
    int q = 16;
    std::vector<BitWord> words;

    int width() const { return fields * q; }
    std::int64_t read(std::size_t word, int field) const { return words[word].field(field, q); }

    friend bool operator==(const FieldMemory&, const FieldMemory&) = default;
};

inline FieldMemory make_memory(int fields, int q, std::size_t count) {
    if (fields < 1) throw ConfigError("memory needs at least one field per word");
    if (q < 2 || q > 63) throw ConfigError("field width must lie in [2, 63]");
    return {fields, q, std::vector<BitWord>(count, BitWord(fields * q))};
}

/// Memory words to and from a flat field sequence (word-major).
inline FieldMemory pack_fields(int fields, int q, std::span<const std::int64_t> values) {
    if (fields < 1 || values.size() % std::size_t(fields) != 0)
        throw ConfigError("field count " + std::to_string(values.size()) + " is not a multiple of the word size");
    auto mem = make_memory(fields, q, values.size() / std::size_t(fields));
    for (std::size_t i = 0; i < values.size(); ++i)
        mem.words[i / std::size_t(fields)].set_field(int(i % std::size_t(fields)), q, values[i]);
    return mem;
}

inline std::vector<std::int64_t> unpack_fields(const FieldMemory& mem) {
    std::vector<std::int64_t> out;
    out.reserve(mem.words.size() * std::size_t(mem.fields));
    for (std::size_t m = 0; m < mem.words.size(); ++m)
        for (int p = 0; p < mem.fields; ++p) out.push_back(mem.read(m, p));
    return out;
}

// --- image file ---------------------------------------------------------------

inline void write_memory_image(std::ostream& os, const FieldMemory& mem) {
    os << "NPE=" << mem.fields << " Q=" << mem.q << " WORDS=" << mem.words.size() << '\n';
    for (const auto& w : mem.words) os << w.to_hex() << '\n';
}

inline FieldMemory read_memory_image(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw FormatError("memory image: missing header");
    int fields = 0, q = 0;
    long long count = -1;
    if (std::sscanf(header.c_str(), "NPE=%d Q=%d WORDS=%lld", &fields, &q, &count) != 3 || fields < 1 || q < 2 || q > 63 ||
        count < 0)
        throw FormatError("memory image: malformed header '" + header + "'");
    auto mem = make_memory(fields, q, 0);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        mem.words.push_back(BitWord::from_hex(line, fields * q));
    }
    if (mem.words.size() != std::size_t(count))
        throw FormatError("memory image: header declares " + std::to_string(count) + " words, found " +
                          std::to_string(mem.words.size()));
    return mem;
}

inline std::string memory_image(const FieldMemory& mem) {
    std::ostringstream os;
    write_memory_image(os, mem);
    return os.str();
}

// --- stage memories -------------------------------------------------------------

struct WeightsMemory {
    FieldMemory weights; // N_PE fields per word, N_n N_I / N_PE words
    FieldMemory biases;  // k fields (NBN) or N_n fields (IBI) per word

    friend bool operator==(const WeightsMemory&, const WeightsMemory&) = default;
};

inline std::size_t bias_words(const StageGeometry& g) {
    return g.schedule() == Schedule::nbn ? std::size_t(g.steps()) : 1;
}

inline int bias_fields(const StageGeometry& g) {
    return g.schedule() == Schedule::nbn ? g.parallel() : g.neurons();
}

inline void validate_memory(const StageGeometry& g, const WeightsMemory& mem) {
    const int q = g.config().fmt.total_bits;
    if (mem.weights.fields != g.pe_count() || mem.weights.q != q ||
        mem.weights.words.size() != std::size_t(g.compute_cycles()))
        throw ConfigError("weights memory must hold " + std::to_string(g.compute_cycles()) + " words of " +
                          std::to_string(g.pe_count()) + "x" + std::to_string(q) + " bits");
    if (mem.biases.fields != bias_fields(g) || mem.biases.q != q || mem.biases.words.size() != bias_words(g))
        throw ConfigError("bias memory must hold " + std::to_string(bias_words(g)) + " words of " +
                          std::to_string(bias_fields(g)) + "x" + std::to_string(q) + " bits");
}

/// Lays out W (N_n x N_I) and b (N_n) in PE-cycle order.
inline WeightsMemory pack_stage(const StageGeometry& g, const DynMatrix<std::int64_t>& w, const DynVector<std::int64_t>& b) {
    if (w.rows() != g.neurons() || w.cols() != g.inputs() || b.size() != g.neurons())
        throw ConfigError("stage weights must be " + std::to_string(g.neurons()) + "x" + std::to_string(g.inputs()) +
                          " with " + std::to_string(g.neurons()) + " biases");
    const int q = g.config().fmt.total_bits;
    WeightsMemory mem{make_memory(g.pe_count(), q, std::size_t(g.compute_cycles())),
                      make_memory(bias_fields(g), q, bias_words(g))};
    for (int m = 0; m < g.compute_cycles(); ++m)
        for (int p = 0; p < g.pe_count(); ++p) {
            const auto s = g.slot(m, p);
            mem.weights.words[std::size_t(m)].set_field(p, q, s.active() ? w(s.neuron, s.input) : 0);
        }
    for (int j = 0; j < g.neurons(); ++j) {
        const int f = bias_fields(g);
        mem.biases.words[std::size_t(j / f)].set_field(j % f, q, b(j));
    }
    return mem;
}

inline std::pair<DynMatrix<std::int64_t>, DynVector<std::int64_t>> unpack_stage(const StageGeometry& g,
                                                                                const WeightsMemory& mem) {
    validate_memory(g, mem);
    DynMatrix<std::int64_t> w = DynMatrix<std::int64_t>::Zero(g.neurons(), g.inputs());
    DynVector<std::int64_t> b(g.neurons());
    for (int m = 0; m < g.compute_cycles(); ++m)
        for (int p = 0; p < g.pe_count(); ++p) {
            const auto s = g.slot(m, p);
            if (s.active()) w(s.neuron, s.input) = mem.weights.read(std::size_t(m), p);
        }
    for (int j = 0; j < g.neurons(); ++j) b(j) = mem.biases.read(std::size_t(j / bias_fields(g)), j % bias_fields(g));
    return {w, b};
}

/// Complex coefficient memory for an array of `pe` complex PEs: word m,
/// PE p holds coefficient m * pe + p (zero past the end).
inline FieldMemory pack_complex(std::span<const Cx<std::int64_t>> coeffs, int pe, int q) {
    if (pe < 1) throw ConfigError("complex PE count must be >= 1");
    const std::size_t words = (coeffs.size() + std::size_t(pe) - 1) / std::size_t(pe);
    auto mem = make_memory(2 * pe, q, words);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        auto& w = mem.words[i / std::size_t(pe)];
        const int p = int(i % std::size_t(pe));
        w.set_field(2 * p, q, coeffs[i].re);
        w.set_field(2 * p + 1, q, coeffs[i].im);
    }
    return mem;
}

inline std::vector<Cx<std::int64_t>> unpack_complex(const FieldMemory& mem, std::size_t count) {
    if (mem.fields % 2 != 0) throw ConfigError("complex memory needs an even field count");
    const std::size_t pe = std::size_t(mem.fields / 2);
    if (count > mem.words.size() * pe) throw ConfigError("complex memory holds fewer coefficients than requested");
    std::vector<Cx<std::int64_t>> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = {mem.read(i / pe, int(2 * (i % pe))), mem.read(i / pe, int(2 * (i % pe) + 1))};
    return out;
}

} // namespace fdsic
