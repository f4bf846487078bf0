// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file sweep.hpp
 * @brief Cancellation versus datapath bit-width.
 *
 * Each model is quantized at every Q with F calibrated on the fitting
 * segment, run through the bit-true reference and scored on the held-out
 * segment. Rows are ordered by Q, then by model position.
 */

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "fdsic/cancellers.hpp"
#include "fdsic/fx_cancellers.hpp"
#include "fdsic/metrics.hpp"

namespace fdsic {

struct SweepRow {
    int q = 0;
    std::string canceller;
    int frac_bits = 0;
    double cancellation_db = 0.0;
};

struct SweepSpec {
    int q_min = 8;
    int q_max = 28;
    std::size_t split = 0; // [0, split) calibrates, [split, n) scores
    FxOptions options;
};

inline std::vector<SweepRow> sweep_q(const SignalBuffer& x, const SignalBuffer& y, const std::vector<AnyModel>& models,
                                     const SweepSpec& spec) {
    require_pair(x, y);
    if (spec.q_min < 2 || spec.q_max > 32 || spec.q_min > spec.q_max)
        throw ConfigError("Q range must satisfy 2 <= q_min <= q_max <= 32");
    if (spec.split == 0 || spec.split >= x.size()) throw ConfigError("sweep split must leave calibration and held-out samples");
    const SignalBuffer calibration = head(x, spec.split);
    std::vector<SweepRow> rows;
    for (int q = spec.q_min; q <= spec.q_max; ++q)
        for (const auto& m : models) {
            const auto ev = fx_evaluate(m, q, calibration, x, spec.options);
            rows.push_back({q, canceller_name(m), ev.fmt.frac_bits, cancellation_db(y, cancel(y, ev.prediction), spec.split)});
        }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "q,canceller,frac_bits,cancellation_db\n";
    const auto old = os.precision(6);
    const auto flags = os.flags();
    os.setf(std::ios::fixed, std::ios::floatfield);
    for (const auto& r : rows) os << r.q << ',' << r.canceller << ',' << r.frac_bits << ',' << r.cancellation_db << '\n';
    os.precision(old);
    os.flags(flags);
}

/// Smallest Q whose cancellation is within `tol_db` of `float_db` from that Q
/// upward through the end of the sweep; -1 if none.
inline int smallest_q_within(const std::vector<SweepRow>& rows, const std::string& canceller, double float_db, double tol_db) {
    int best = -1;
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
        if (it->canceller != canceller) continue;
        if (std::abs(it->cancellation_db - float_db) <= tol_db) best = it->q;
        else break;
    }
    return best;
}

} // namespace fdsic
