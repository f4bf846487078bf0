// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file fixed_point.hpp
 * @brief Q-bit saturating two's-complement fixed-point arithmetic.
 *
 * Every value of a datapath shares one FxFormat (total bits Q, fraction
 * bits F). Products are formed at full 2Q-bit precision, rounded to nearest
 * with ties away from zero at the F boundary and saturated back to Q bits.
 * Additions saturate. Raw values are carried in int64_t, which holds any
 * product of two Q <= 32 operands exactly.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "fdsic/error.hpp"

namespace fdsic {

struct FxFormat {
    int total_bits = 16;
    int frac_bits = 0;

    constexpr std::int64_t max_raw() const { return (std::int64_t{1} << (total_bits - 1)) - 1; }
    constexpr std::int64_t min_raw() const { return -(std::int64_t{1} << (total_bits - 1)); }
    double resolution() const { return std::ldexp(1.0, -frac_bits); }

    friend constexpr bool operator==(const FxFormat&, const FxFormat&) = default;
};

inline void validate(const FxFormat& fmt) {
    if (fmt.total_bits < 2 || fmt.total_bits > 32)
        throw ConfigError("fixed-point total bits must lie in [2, 32], got " + std::to_string(fmt.total_bits));
    if (fmt.frac_bits < 0 || fmt.frac_bits >= fmt.total_bits)
        throw ConfigError("fixed-point fraction bits must lie in [0, Q), got " + std::to_string(fmt.frac_bits));
}

/// "Q17.12" -> {17, 12}
inline FxFormat parse_format(std::string_view text) {
    auto fail = [&] { return ConfigError("malformed fixed-point format '" + std::string(text) + "', expected Q<total>.<frac>"); };
    if (text.size() < 4 || (text[0] != 'Q' && text[0] != 'q')) throw fail();
    const auto dot = text.find('.');
    if (dot == std::string_view::npos) throw fail();
    FxFormat fmt;
    try {
        std::size_t used = 0;
        const std::string total(text.substr(1, dot - 1));
        const std::string frac(text.substr(dot + 1));
        fmt.total_bits = std::stoi(total, &used);
        if (used != total.size()) throw fail();
        fmt.frac_bits = std::stoi(frac, &used);
        if (used != frac.size()) throw fail();
    } catch (const std::logic_error&) {
        throw fail();
    }
    validate(fmt);
    return fmt;
}

inline std::string to_string(const FxFormat& fmt) {
    return "Q" + std::to_string(fmt.total_bits) + "." + std::to_string(fmt.frac_bits);
}

namespace fx {

constexpr std::int64_t saturate(std::int64_t v, const FxFormat& fmt) {
    if (v > fmt.max_raw()) return fmt.max_raw();
    if (v < fmt.min_raw()) return fmt.min_raw();
    return v;
}

/// Divide by 2^shift, rounding to nearest with ties away from zero.
constexpr std::int64_t round_shift_right(std::int64_t v, int shift) {
    if (shift <= 0) return v;
    if (shift >= 63) return 0;
    const std::uint64_t mag = v < 0 ? std::uint64_t(0) - std::uint64_t(v) : std::uint64_t(v);
    const std::uint64_t r = (mag + (std::uint64_t{1} << (shift - 1))) >> shift;
    return v < 0 ? -std::int64_t(r) : std::int64_t(r);
}

constexpr std::int64_t add(std::int64_t a, std::int64_t b, const FxFormat& fmt) { return saturate(a + b, fmt); }
constexpr std::int64_t sub(std::int64_t a, std::int64_t b, const FxFormat& fmt) { return saturate(a - b, fmt); }
constexpr std::int64_t neg(std::int64_t a, const FxFormat& fmt) { return saturate(-a, fmt); }

constexpr std::int64_t mul(std::int64_t a, std::int64_t b, const FxFormat& fmt) {
    return saturate(round_shift_right(a * b, fmt.frac_bits), fmt);
}

/// Multiply by 2^s (left shift saturates, right shift rounds).
constexpr std::int64_t scale_pow2(std::int64_t a, int s, const FxFormat& fmt) {
    if (s < 0) return saturate(round_shift_right(a, -s), fmt);
    if (a == 0) return 0;
    if (s >= fmt.total_bits) return a > 0 ? fmt.max_raw() : fmt.min_raw();
    return saturate(a * (std::int64_t{1} << s), fmt);
}

inline std::int64_t quantize_raw(double v, const FxFormat& fmt) {
    const double scaled = std::ldexp(v, fmt.frac_bits);
    if (scaled >= double(fmt.max_raw())) return fmt.max_raw();
    if (scaled <= double(fmt.min_raw())) return fmt.min_raw();
    return saturate(std::llround(scaled), fmt);
}

inline double to_double(std::int64_t raw, const FxFormat& fmt) { return std::ldexp(double(raw), -fmt.frac_bits); }

} // namespace fx

/// A raw integer tagged with its format.
struct FxValue {
    std::int64_t raw = 0;
    FxFormat fmt;

    double to_double() const { return fx::to_double(raw, fmt); }
    friend constexpr bool operator==(const FxValue&, const FxValue&) = default;
};

inline FxValue quantize(double v, const FxFormat& fmt) {
    if (!std::isfinite(v)) throw NumericError("cannot quantize a non-finite value");
    return {fx::quantize_raw(v, fmt), fmt};
}

namespace detail {
inline void require_same(const FxValue& a, const FxValue& b) {
    if (!(a.fmt == b.fmt))
        throw ConfigError("fixed-point format mismatch: " + to_string(a.fmt) + " vs " + to_string(b.fmt));
}
} // namespace detail

inline FxValue fx_mul(const FxValue& a, const FxValue& b) {
    detail::require_same(a, b);
    return {fx::mul(a.raw, b.raw, a.fmt), a.fmt};
}

inline FxValue fx_add(const FxValue& a, const FxValue& b) {
    detail::require_same(a, b);
    return {fx::add(a.raw, b.raw, a.fmt), a.fmt};
}

inline FxValue fx_mac(const FxValue& acc, const FxValue& a, const FxValue& b) { return fx_add(acc, fx_mul(a, b)); }

/// Fraction bits that keep `max_abs` representable in Q bits with maximal resolution.
inline int calibrate_frac_bits(int total_bits, double max_abs) {
    if (!(max_abs > 0.0) || !std::isfinite(max_abs)) return total_bits - 1;
    const int int_bits = int(std::ceil(std::log2(max_abs)));
    int frac = total_bits - 1 - int_bits;
    if (frac < 0) frac = 0;
    if (frac > total_bits - 1) frac = total_bits - 1;
    return frac;
}

} // namespace fdsic
