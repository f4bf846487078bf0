// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file arith.hpp
 * @brief Arithmetic policies shared by every canceller datapath.
 *
 * The canceller kernels are written once against a policy type `A` that
 * supplies `mul`, `add`, `sub`, `neg`, `relu` and `scale_pow2` on
 * `A::value_type`. Swapping the policy turns the same kernel into the
 * floating-point reference, the bit-true fixed-point datapath, an operation
 * counter, or a dynamic-range probe used to pick fraction bits.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "fdsic/fixed_point.hpp"

namespace fdsic {

template <class T>
struct Cx {
    T re{};
    T im{};
    friend constexpr bool operator==(const Cx&, const Cx&) = default;
};

inline Cx<double> to_cx(std::complex<double> z) { return {z.real(), z.imag()}; }
inline std::complex<double> to_complex(Cx<double> z) { return {z.re, z.im}; }

struct FloatArith {
    using value_type = double;

    value_type mul(value_type a, value_type b) const { return a * b; }
    value_type add(value_type a, value_type b) const { return a + b; }
    value_type sub(value_type a, value_type b) const { return a - b; }
    value_type neg(value_type a) const { return -a; }
    value_type relu(value_type a) const { return a > 0.0 ? a : 0.0; }
    value_type scale_pow2(value_type a, int s) const { return std::ldexp(a, s); }
};

/// Bit-true Q-bit saturating datapath on raw integers.
struct FxArith {
    using value_type = std::int64_t;
    FxFormat fmt;

    value_type mul(value_type a, value_type b) const { return fx::mul(a, b, fmt); }
    value_type add(value_type a, value_type b) const { return fx::add(a, b, fmt); }
    value_type sub(value_type a, value_type b) const { return fx::sub(a, b, fmt); }
    value_type neg(value_type a) const { return fx::neg(a, fmt); }
    value_type relu(value_type a) const { return a > 0 ? a : 0; }
    value_type scale_pow2(value_type a, int s) const { return fx::scale_pow2(a, s, fmt); }
};

/// Floating-point evaluation that tallies real operations.
/// A ReLU is a comparison and is tallied as one addition; negation and
/// power-of-two scaling are wiring and cost nothing.
struct CountingArith {
    using value_type = double;
    std::uint64_t mults = 0;
    std::uint64_t adds = 0;

    value_type mul(value_type a, value_type b) { ++mults; return a * b; }
    value_type add(value_type a, value_type b) { ++adds; return a + b; }
    value_type sub(value_type a, value_type b) { ++adds; return a - b; }
    value_type neg(value_type a) const { return -a; }
    value_type relu(value_type a) { ++adds; return a > 0.0 ? a : 0.0; }
    value_type scale_pow2(value_type a, int s) const { return std::ldexp(a, s); }
};

/// Floating-point evaluation that records the largest magnitude produced.
struct RangeArith {
    using value_type = double;
    double max_abs = 0.0;

    value_type observe(value_type v) {
        max_abs = std::max(max_abs, std::abs(v));
        return v;
    }
    value_type mul(value_type a, value_type b) { return observe(a * b); }
    value_type add(value_type a, value_type b) { return observe(a + b); }
    value_type sub(value_type a, value_type b) { return observe(a - b); }
    value_type neg(value_type a) { return observe(-a); }
    value_type relu(value_type a) { return observe(a > 0.0 ? a : 0.0); }
    value_type scale_pow2(value_type a, int s) { return observe(std::ldexp(a, s)); }
};

/// Complex product with three real multiplications and five real additions:
///   k1 = b.re (a.re + a.im), k2 = a.re (b.im - b.re), k3 = a.im (b.re + b.im)
///   re = k1 - k3, im = k1 + k2
template <class A>
Cx<typename A::value_type> cmul(A& ar, const Cx<typename A::value_type>& a, const Cx<typename A::value_type>& b) {
    const auto k1 = ar.mul(b.re, ar.add(a.re, a.im));
    const auto k2 = ar.mul(a.re, ar.sub(b.im, b.re));
    const auto k3 = ar.mul(a.im, ar.add(b.re, b.im));
    return {ar.sub(k1, k3), ar.add(k1, k2)};
}

template <class A>
Cx<typename A::value_type> cadd(A& ar, const Cx<typename A::value_type>& a, const Cx<typename A::value_type>& b) {
    return {ar.add(a.re, b.re), ar.add(a.im, b.im)};
}

template <class A>
Cx<typename A::value_type> cconj(A& ar, const Cx<typename A::value_type>& a) {
    return {a.re, ar.neg(a.im)};
}

/// Balanced pairwise reduction: at every level element 2i is added to
/// element 2i+1 in ascending order and an odd trailing element passes
/// through unchanged. Saturation makes this order observable.
template <class A, class T>
T tree_reduce(A& ar, std::vector<T> level) {
    if (level.empty()) return T{};
    while (level.size() > 1) {
        std::vector<T> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            if constexpr (std::is_same_v<T, typename A::value_type>)
                next.push_back(ar.add(level[i], level[i + 1]));
            else
                next.push_back(cadd(ar, level[i], level[i + 1]));
        }
        if (level.size() % 2 == 1) next.push_back(level.back());
        level = std::move(next);
    }
    return level.front();
}

} // namespace fdsic
