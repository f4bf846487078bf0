// SPDX-License-Identifier: Apache-2.0
#pragma once

/// @file trace.hpp
/// @brief Per-cycle activity records of a pipeline simulation.

#include <ostream>
#include <string>
#include <vector>

namespace fdsic {

struct TraceRecord {
    long cycle = 0;
    std::string stage;
    int pe_activity = 0;        // PEs that performed a MAC this cycle
    bool stall = false;         // blocked by missing inputs or a full register
    bool outputs_valid = false; // stage output register holds data after the cycle
};

using Trace = std::vector<TraceRecord>;

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "cycle,stage,pe_activity,stall,outputs_valid\n";
    for (const auto& r : trace)
        os << r.cycle << ',' << r.stage << ',' << r.pe_activity << ',' << int(r.stall) << ',' << int(r.outputs_valid) << '\n';
}

} // namespace fdsic
