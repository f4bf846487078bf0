// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file complexity.hpp
 * @brief Closed-form and instrumented real operation counts per output sample.
 *
 * Conventions: a complex product costs 3 real multiplications and 5 real
 * additions, a complex addition 2 real additions, a ReLU one addition
 * (comparison). Power-of-two scaling is a shift and costs nothing.
 *
 * The closed forms count the weighted sums only. Work outside them is
 * reported separately by the instrumented counter as auxiliary:
 *   - polynomial: basis functions of the newest sample (older ones are
 *     reused from the delay line)
 *   - NN: the final addition of the linear and non-linear parts
 */

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fdsic/arith.hpp"
#include "fdsic/cancellers.hpp"
#include "fdsic/error.hpp"
#include "fdsic/kernels.hpp"

namespace fdsic {

struct OpCount {
    std::int64_t real_mults = 0;
    std::int64_t real_adds = 0;
    std::int64_t real_params = 0;

    friend bool operator==(const OpCount&, const OpCount&) = default;
};

inline OpCount poly_counts(int memory, int order) {
    if (memory < 1) throw ConfigError("memory length L must be >= 1");
    if (order < 1 || order % 2 == 0) throw ConfigError("polynomial order P must be odd and positive");
    const std::int64_t k = std::int64_t(memory) * basis_per_tap(order); // L (P+1)(P+3) / 4
    return {3 * k, 7 * k - 2, 2 * k};
}

inline OpCount linear_counts(int memory) {
    if (memory < 1) throw ConfigError("memory length L must be >= 1");
    const std::int64_t l = memory;
    return {3 * l, 7 * l - 2, 2 * l};
}

/// Includes the parallel linear canceller. N_h = 0 leaves its cost alone.
inline OpCount nn_counts(int memory, int hidden) {
    if (memory < 1) throw ConfigError("memory length L must be >= 1");
    if (hidden < 0) throw ConfigError("hidden neuron count must be >= 0");
    const std::int64_t l = memory, h = hidden;
    const auto lin = linear_counts(memory);
    return {(2 * l + 2) * h + lin.real_mults, (2 * l + 3) * h + lin.real_adds,
            hidden == 0 ? lin.real_params : (2 * l + 1) * h + (2 * h + 2) + lin.real_params};
}

/// Instrumented per-sample counts, averaged over the samples of an input.
struct EmpiricalCount {
    OpCount core;      // comparable to the closed forms
    OpCount auxiliary; // work the closed forms leave out
};

namespace detail {

inline OpCount per_sample(const CountingArith& c, std::size_t samples) {
    if (samples == 0) throw ConfigError("empirical counting needs at least one sample");
    if (c.mults % samples != 0 || c.adds % samples != 0)
        throw NumericError("operation counts differ between samples");
    return {std::int64_t(c.mults / samples), std::int64_t(c.adds / samples), 0};
}

} // namespace detail

inline EmpiricalCount empirical_count(const LinearModel& m, const SignalBuffer& x) {
    CountingArith core;
    const auto taps = to_cx(std::span<const Complex>(m.taps));
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto w = window_at(x, n, m.memory());
        fir_sample(core, std::span<const Cx<double>>(taps), std::span<const Cx<double>>(w), 1);
    }
    EmpiricalCount e{detail::per_sample(core, x.size()), {}};
    e.core.real_params = 2 * std::int64_t(m.taps.size());
    return e;
}

inline EmpiricalCount empirical_count(const PolyModel& m, const SignalBuffer& x, int lanes = 1) {
    validate(m);
    CountingArith core, aux;
    const auto coeffs = to_cx(std::span<const Complex>(m.coeffs));
    const int per_tap = basis_per_tap(m.order);
    std::vector<Cx<double>> history(coeffs.size()), fresh;
    for (std::size_t n = 0; n < x.size(); ++n) {
        fresh.clear();
        append_sample_basis(aux, to_cx(x[n]), m.order, fresh);
        std::move_backward(history.begin(), history.end() - per_tap, history.end());
        std::copy(fresh.begin(), fresh.end(), history.begin());
        poly_sum(core, std::span<const Cx<double>>(coeffs), std::span<const Cx<double>>(history), lanes);
    }
    EmpiricalCount e{detail::per_sample(core, x.size()), detail::per_sample(aux, x.size())};
    e.core.real_params = 2 * std::int64_t(m.coeffs.size());
    return e;
}

inline EmpiricalCount empirical_count(const NNModel& m, const SignalBuffer& x, const NnLanes& lanes = {}) {
    validate(m);
    CountingArith core, aux;
    const auto taps = to_cx(std::span<const Complex>(m.linear.taps));
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto w = window_at(x, n, m.memory);
        const std::span<const Cx<double>> ws(w);
        const auto lin = fir_sample(core, std::span<const Cx<double>>(taps), ws, lanes.linear);
        const auto nn = nn_part(core, m, ws, lanes);
        cadd(aux, lin, nn);
    }
    EmpiricalCount e{detail::per_sample(core, x.size()), detail::per_sample(aux, x.size())};
    e.core.real_params = m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size() + 2 * std::int64_t(m.linear.taps.size());
    return e;
}

/// Side-by-side table of both cancellers.
inline void write_complexity_table(std::ostream& os, int memory, int order, int hidden) {
    const auto p = poly_counts(memory, order);
    const auto n = nn_counts(memory, hidden);
    const std::string poly = "Poly (L=" + std::to_string(memory) + ", P=" + std::to_string(order) + ")";
    const std::string nn = "NN (L=" + std::to_string(memory) + ", N_h=" + std::to_string(hidden) + ")";
    auto row = [&](const std::string& a, const std::string& b, const std::string& c) {
        os << a << std::string(a.size() < 24 ? 24 - a.size() : 1, ' ') << b
           << std::string(b.size() < 22 ? 22 - b.size() : 1, ' ') << c << '\n';
    };
    row("", poly, nn);
    row("Real Parameters", std::to_string(p.real_params), std::to_string(n.real_params));
    row("Real Multiplications", std::to_string(p.real_mults), std::to_string(n.real_mults));
    row("Real Additions", std::to_string(p.real_adds), std::to_string(n.real_adds));
}

} // namespace fdsic
