// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file geometry.hpp
 * @brief Macro-pipeline stage geometry for the neuron-by-neuron (NBN) and
 *        input-by-input (IBI) schedules.
 *
 * A stage computes o_j = f(b_j + sum_i w_{j,i} x_i) for N_n neurons of N_I
 * inputs on an array of N_PE multiply-accumulate units.
 *
 * NBN, N_PE <= N_I: one neuron at a time, N_I / N_PE cycles per neuron;
 *   PE p handles input t*N_PE + p in cycle t of the neuron.
 * NBN, N_PE = k N_I: k neurons per cycle; PE p handles neuron m*k + p/N_I,
 *   input p % N_I.
 * IBI, N_PE <= N_n: one input at a time, N_n / N_PE cycles per input; PE p
 *   keeps N_n / N_PE partial sums and in cycle t of an input updates neuron
 *   t*N_PE + p.
 * IBI, N_PE = k N_n: k inputs per cycle; PE p accumulates neuron p % N_n
 *   from input m*k + p/N_n.
 *
 * In every case a sample takes N_n N_I / N_PE compute cycles.
 */

#include <optional>
#include <string>
#include <vector>

#include "fdsic/error.hpp"
#include "fdsic/fixed_point.hpp"

namespace fdsic {

enum class Schedule { nbn, ibi };
enum class Activation { none, relu };

inline const char* to_string(Schedule s) { return s == Schedule::nbn ? "NBN" : "IBI"; }

struct StageConfig {
    Schedule schedule = Schedule::nbn;
    int inputs = 1;   // N_I
    int neurons = 1;  // N_n
    int pe_count = 1; // N_PE
    FxFormat fmt{16, 8};
    Activation activation = Activation::relu;
};

/// Where PE `pe` reads and accumulates during a compute cycle.
struct PeSlot {
    int neuron = -1;
    int input = -1;
    int mem = 0; // partial-sum register index inside the PE
    bool active() const { return neuron >= 0; }
};

/// A neuron's partial sum location after the last compute cycle.
struct PartialSite {
    int pe = 0;
    int mem = 0;
};

class StageGeometry {
public:
    explicit StageGeometry(const StageConfig& cfg) : cfg_(cfg) {
        const int ni = cfg.inputs, nn = cfg.neurons, npe = cfg.pe_count;
        if (ni < 1 || nn < 1 || npe < 1) throw ConfigError("stage dimensions and PE count must be positive");
        auto fail = [&](const std::string& why) {
            return ConfigError(std::string(to_string(cfg.schedule)) + " stage N_I=" + std::to_string(ni) +
                               " N_n=" + std::to_string(nn) + " N_PE=" + std::to_string(npe) + ": " + why);
        };
        if (cfg.schedule == Schedule::nbn) {
            if (npe <= ni) {
                if (ni % npe != 0) throw fail("N_I must be a multiple of N_PE");
                parallel_ = 1;
                cycles_per_step_ = ni / npe;
            } else {
                if (npe % ni != 0) throw fail("N_PE must be a multiple of N_I");
                parallel_ = npe / ni;
                if (nn % parallel_ != 0) throw fail("N_n must be a multiple of k = N_PE / N_I");
                cycles_per_step_ = 1;
            }
            steps_ = nn / parallel_;
            mem_slots_ = 1;
        } else {
            if (npe <= nn) {
                if (nn % npe != 0) throw fail("N_n must be a multiple of N_PE");
                parallel_ = 1;
                cycles_per_step_ = nn / npe;
            } else {
                if (npe % nn != 0) throw fail("N_PE must be a multiple of N_n");
                parallel_ = npe / nn;
                if (ni % parallel_ != 0) throw fail("N_I must be a multiple of k = N_PE / N_n");
                cycles_per_step_ = 1;
            }
            steps_ = ni / parallel_;
            mem_slots_ = cycles_per_step_;
        }
        validate(cfg.fmt);
    }

    const StageConfig& config() const { return cfg_; }
    Schedule schedule() const { return cfg_.schedule; }
    int inputs() const { return cfg_.inputs; }
    int neurons() const { return cfg_.neurons; }
    int pe_count() const { return cfg_.pe_count; }

    /// k: neurons (NBN) or inputs (IBI) handled in parallel.
    int parallel() const { return parallel_; }
    /// NBN: neuron groups per sample. IBI: input groups per sample.
    int steps() const { return steps_; }
    /// Compute cycles spent on one step.
    int cycles_per_step() const { return cycles_per_step_; }
    /// Partial-sum registers per PE (ceil(N_n / N_PE) for IBI, 1 for NBN).
    int mem_slots() const { return mem_slots_; }
    /// N_n N_I / N_PE
    int compute_cycles() const { return steps_ * cycles_per_step_; }

    PeSlot slot(int cycle, int pe) const {
        const int ni = cfg_.inputs, nn = cfg_.neurons, npe = cfg_.pe_count;
        PeSlot s;
        if (cfg_.schedule == Schedule::nbn) {
            if (parallel_ == 1) {
                s.neuron = cycle / cycles_per_step_;
                s.input = (cycle % cycles_per_step_) * npe + pe;
            } else {
                s.neuron = cycle * parallel_ + pe / ni;
                s.input = pe % ni;
            }
        } else {
            if (parallel_ == 1) {
                const int t = cycle % cycles_per_step_;
                s.input = cycle / cycles_per_step_;
                s.neuron = t * npe + pe;
                s.mem = t;
            } else {
                s.input = cycle * parallel_ + pe / nn;
                s.neuron = pe % nn;
            }
        }
        return s;
    }

    /// PEs holding a neuron's partial sums, in adder-tree order.
    std::vector<PartialSite> sites(int neuron) const {
        const int ni = cfg_.inputs, nn = cfg_.neurons, npe = cfg_.pe_count;
        std::vector<PartialSite> out;
        if (cfg_.schedule == Schedule::nbn) {
            if (parallel_ == 1) {
                for (int p = 0; p < npe; ++p) out.push_back({p, 0});
            } else {
                const int g = neuron % parallel_;
                for (int i = 0; i < ni; ++i) out.push_back({g * ni + i, 0});
            }
        } else {
            if (parallel_ == 1) {
                out.push_back({neuron % npe, neuron / npe});
            } else {
                for (int g = 0; g < parallel_; ++g) out.push_back({g * nn + neuron, 0});
            }
        }
        return out;
    }

    /// Number of partial sums reduced per neuron by the output interface.
    int lanes() const {
        if (cfg_.schedule == Schedule::nbn) return parallel_ == 1 ? cfg_.pe_count : cfg_.inputs;
        return parallel_;
    }

private:
    StageConfig cfg_;
    int parallel_ = 1;
    int cycles_per_step_ = 1;
    int steps_ = 1;
    int mem_slots_ = 1;
};

/// Closed-form stage timing.
struct AnalyticPerformance {
    int latency = 0;                  // N_n N_I / N_PE + 1
    double throughput = 0.0;          // N_PE / (N_n N_I), output sets per cycle
    int cycles_per_sample = 0;        // N_n N_I / N_PE
    std::optional<int> first_output;  // absent when the closed form is not an integer
    int scheduled_first_output = 0;   // first-output cycle of the k-parallel schedule
};

inline AnalyticPerformance analytic_performance(const StageConfig& cfg) {
    const StageGeometry g(cfg);
    AnalyticPerformance a;
    const int work = cfg.neurons * cfg.inputs;
    a.cycles_per_sample = work / cfg.pe_count;
    a.latency = a.cycles_per_sample + 1;
    a.throughput = double(cfg.pe_count) / double(work);
    if (cfg.schedule == Schedule::nbn) {
        if (cfg.inputs % cfg.pe_count == 0) a.first_output = cfg.inputs / cfg.pe_count + 1;
        a.scheduled_first_output = g.cycles_per_step() + 1;
    } else {
        a.first_output = a.latency;
        a.scheduled_first_output = a.latency;
    }
    return a;
}

} // namespace fdsic
