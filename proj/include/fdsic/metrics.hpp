// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "fdsic/error.hpp"
#include "fdsic/signal.hpp"

namespace fdsic {

/// Cancellation over samples [begin, end): -10 log10(sum|y|^2 / sum|y_c|^2).
/// Negative values mean the residual is weaker than the interference.
/// A perfect cancellation returns -infinity.
inline double cancellation_db(const SignalBuffer& y, const SignalBuffer& residual, std::size_t begin, std::size_t end) {
    if (y.size() != residual.size())
        throw ConfigError("cancellation_db: length mismatch " + std::to_string(y.size()) + " vs " +
                          std::to_string(residual.size()));
    end = std::min(end, y.size());
    double si = 0.0, res = 0.0;
    for (std::size_t n = begin; n < end; ++n) {
        si += std::norm(y[n]);
        res += std::norm(residual[n]);
    }
    if (!(si > 0.0)) throw NumericError("cancellation_db: self-interference power is zero");
    if (!(res > 0.0)) return -std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(si / res);
}

inline double cancellation_db(const SignalBuffer& y, const SignalBuffer& residual, std::size_t skip) {
    return cancellation_db(y, residual, skip, y.size());
}

} // namespace fdsic
