// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "fdsic/fdsic.hpp"

namespace fdsic::test {

inline SignalBuffer random_signal(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale / std::sqrt(2.0));
    SignalBuffer s;
    s.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.samples.emplace_back(g(rng), g(rng));
    return s;
}

inline std::vector<Complex> random_complex(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    std::vector<Complex> v(n);
    for (auto& z : v) z = {g(rng), g(rng)};
    return v;
}

inline std::int64_t random_raw(std::mt19937_64& rng, const FxFormat& fmt) {
    return std::uniform_int_distribution<std::int64_t>(fmt.min_raw(), fmt.max_raw())(rng);
}

inline Cx<std::int64_t> random_cx_raw(std::mt19937_64& rng, const FxFormat& fmt) {
    return {random_raw(rng, fmt), random_raw(rng, fmt)};
}

/// Small default dataset (shorter than the CLI default) for quick tests.
inline Dataset small_dataset(int symbols = 60, std::uint64_t seed = 7) {
    OfdmConfig oc;
    oc.num_symbols = symbols;
    oc.seed = seed;
    Dataset d;
    d.x = generate_tx(oc);
    d.y = apply_si_chain(default_si_chain(), d.x, 11);
    return d;
}

} // namespace fdsic::test
