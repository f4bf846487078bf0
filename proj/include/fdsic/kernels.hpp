// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file kernels.hpp
 * @brief Canceller datapath kernels, generic over an arithmetic policy.
 *
 * Every weighted sum is evaluated the way a PE array does it: the terms are
 * dealt round-robin onto `lanes` accumulators (term i goes to lane i % lanes,
 * each lane accumulating in ascending order and starting from its first
 * product), and the lanes are then combined by the balanced adder tree of
 * tree_reduce(). With floating point the lane count only perturbs rounding;
 * with the saturating fixed-point policy it defines the bit-exact result.
 *
 * Windows are ordered by delay: window[l] = x(n - l).
 */

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fdsic/arith.hpp"
#include "fdsic/pipeline/geometry.hpp"

namespace fdsic {

template <class V>
using DynMatrix = Eigen::Matrix<V, Eigen::Dynamic, Eigen::Dynamic>;
template <class V>
using DynVector = Eigen::Matrix<V, Eigen::Dynamic, 1>;

/// Real strided dot product: term i is w(i) * x(i), i in [0, n).
template <class A, class WeightAt, class InputAt>
typename A::value_type lane_dot(A& ar, int n, int lanes, WeightAt&& w, InputAt&& x) {
    using V = typename A::value_type;
    std::vector<V> partial;
    const int used = std::min(lanes, n);
    partial.reserve(std::size_t(std::max(used, 0)));
    for (int p = 0; p < used; ++p) {
        V acc = ar.mul(w(p), x(p));
        for (int i = p + lanes; i < n; i += lanes) acc = ar.add(acc, ar.mul(w(i), x(i)));
        partial.push_back(acc);
    }
    return tree_reduce(ar, std::move(partial));
}

/// Complex strided dot product: term i is x(i) * c(i) via cmul().
template <class A, class CoeffAt, class InputAt>
Cx<typename A::value_type> lane_cdot(A& ar, int n, int lanes, CoeffAt&& c, InputAt&& x) {
    using V = typename A::value_type;
    std::vector<Cx<V>> partial;
    const int used = std::min(lanes, n);
    partial.reserve(std::size_t(std::max(used, 0)));
    for (int p = 0; p < used; ++p) {
        Cx<V> acc = cmul(ar, x(p), c(p));
        for (int i = p + lanes; i < n; i += lanes) acc = cadd(ar, acc, cmul(ar, x(i), c(i)));
        partial.push_back(acc);
    }
    return tree_reduce(ar, std::move(partial));
}

/// One dense layer: o_j = f(b_j + sum_i W(j, i) in_i).
template <class A>
std::vector<typename A::value_type> dense_layer(A& ar, const DynMatrix<typename A::value_type>& w,
                                                const DynVector<typename A::value_type>& b,
                                                std::span<const typename A::value_type> in, int lanes,
                                                Activation act) {
    using V = typename A::value_type;
    const int n_in = int(w.cols());
    std::vector<V> out(static_cast<std::size_t>(w.rows()));
    for (int j = 0; j < int(w.rows()); ++j) {
        V s = lane_dot(ar, n_in, lanes, [&](int i) { return w(j, i); }, [&](int i) { return in[std::size_t(i)]; });
        s = ar.add(s, b(j));
        if (act == Activation::relu) s = ar.relu(s);
        out[std::size_t(j)] = s;
    }
    return out;
}

/// Linear canceller: sum_l taps[l] x(n - l).
template <class A>
Cx<typename A::value_type> fir_sample(A& ar, std::span<const Cx<typename A::value_type>> taps,
                                      std::span<const Cx<typename A::value_type>> window, int lanes) {
    return lane_cdot(ar, int(taps.size()), lanes, [&](int l) { return taps[std::size_t(l)]; },
                     [&](int l) { return window[std::size_t(l)]; });
}

/// Number of basis functions contributed by one delay tap: (P+1)(P+3)/4.
constexpr int basis_per_tap(int order) { return (order + 1) * (order + 3) / 4; }

/// Basis functions x^q (x*)^(p-q) of one sample for odd p <= P, 0 <= q <= p,
/// appended in (p, q) order.
///
/// Evaluation order (fixed so that fixed-point results are reproducible):
///   m1 = re^2 + im^2, m_k = m_{k-1} m1            (|x|^2 chain)
///   x^1 = x, x^d = x^{d-1} x                      (power ladder, cmul())
///   term(p, q) = m_k * (x^d or conj(x^d)),  k = min(q, p-q), d = |2q - p|
template <class A>
void append_sample_basis(A& ar, const Cx<typename A::value_type>& x, int order,
                         std::vector<Cx<typename A::value_type>>& out) {
    using V = typename A::value_type;
    const int max_k = (order - 1) / 2;
    std::vector<V> mag(static_cast<std::size_t>(max_k + 1));
    if (max_k >= 1) {
        mag[1] = ar.add(ar.mul(x.re, x.re), ar.mul(x.im, x.im));
        for (int k = 2; k <= max_k; ++k) mag[std::size_t(k)] = ar.mul(mag[std::size_t(k - 1)], mag[1]);
    }
    std::vector<Cx<V>> pw(static_cast<std::size_t>(order + 1));
    pw[1] = x;
    for (int d = 2; d <= order; ++d) pw[std::size_t(d)] = cmul(ar, pw[std::size_t(d - 1)], x);

    for (int p = 1; p <= order; p += 2) {
        for (int q = 0; q <= p; ++q) {
            const int k = std::min(q, p - q);
            const int d = 2 * q > p ? 2 * q - p : p - 2 * q;
            Cx<V> base = 2 * q > p ? pw[std::size_t(d)] : cconj(ar, pw[std::size_t(d)]);
            if (k > 0) base = {ar.mul(mag[std::size_t(k)], base.re), ar.mul(mag[std::size_t(k)], base.im)};
            out.push_back(base);
        }
    }
}

/// Basis vector over a window, canonical order: delay outer, p middle, q inner.
template <class A>
std::vector<Cx<typename A::value_type>> window_basis(A& ar, std::span<const Cx<typename A::value_type>> window,
                                                     int order) {
    std::vector<Cx<typename A::value_type>> out;
    out.reserve(window.size() * std::size_t(basis_per_tap(order)));
    for (const auto& x : window) append_sample_basis(ar, x, order, out);
    return out;
}

/// Polynomial canceller weighted sum over a precomputed basis vector.
template <class A>
Cx<typename A::value_type> poly_sum(A& ar, std::span<const Cx<typename A::value_type>> coeffs,
                                    std::span<const Cx<typename A::value_type>> basis, int lanes) {
    return lane_cdot(ar, int(coeffs.size()), lanes, [&](int i) { return coeffs[std::size_t(i)]; },
                     [&](int i) { return basis[std::size_t(i)]; });
}

/// NN input vector: [Re x(n) .. Re x(n-L+1), Im x(n) .. Im x(n-L+1)].
template <class V>
std::vector<V> nn_inputs(std::span<const Cx<V>> window) {
    std::vector<V> in(2 * window.size());
    for (std::size_t l = 0; l < window.size(); ++l) {
        in[l] = window[l].re;
        in[window.size() + l] = window[l].im;
    }
    return in;
}

/// PE-array lane counts that fix the evaluation order of a two-layer NN.
struct NnLanes {
    int hidden = 1;
    int output = 1;
    int linear = 1;
};

/// Output layer pair before denormalization.
template <class A, class Params>
Cx<typename A::value_type> nn_raw_output(A& ar, const Params& m, std::span<const Cx<typename A::value_type>> window,
                                         const NnLanes& lanes) {
    using V = typename A::value_type;
    const auto in = nn_inputs<V>(window);
    const auto hidden = dense_layer(ar, m.w1, m.b1, std::span<const V>(in), lanes.hidden, Activation::relu);
    const auto out = dense_layer(ar, m.w2, m.b2, std::span<const V>(hidden), lanes.output, Activation::none);
    return {out[0], out[1]};
}

/// Non-linear part: output layer scaled by 2^shift.
template <class A, class Params>
Cx<typename A::value_type> nn_part(A& ar, const Params& m, std::span<const Cx<typename A::value_type>> window,
                                   const NnLanes& lanes) {
    const auto o = nn_raw_output(ar, m, window, lanes);
    return {ar.scale_pow2(o.re, m.denorm_shift), ar.scale_pow2(o.im, m.denorm_shift)};
}

} // namespace fdsic
