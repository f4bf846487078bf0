// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file units.hpp
 * @brief Cycle-level hardware units of the macro-pipeline.
 *
 * Units talk through single-entry registers. A consumer clears a register
 * when it takes the value; a producer may only write an empty register.
 * The driver evaluates units from the sink back to the source every cycle,
 * so a register emptied in cycle t can be refilled in the same cycle and
 * the new value is seen by the consumer in cycle t + 1. That is a
 * valid/ready handshake with one registered cycle per boundary.
 *
 * Each stage has a register between its PE array and its output interface.
 * The output interface (adder tree, bias, activation) drains it into the
 * stage output register one cycle later. A PE array that completes a step
 * while that register is still occupied stalls.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdsic/arith.hpp"
#include "fdsic/pipeline/geometry.hpp"
#include "fdsic/pipeline/trace.hpp"
#include "fdsic/pipeline/weights_memory.hpp"

namespace fdsic {

template <class T>
struct Reg {
    std::optional<T> v;
    bool full() const { return v.has_value(); }
    T take() {
        T out = std::move(*v);
        v.reset();
        return out;
    }
};

/// Consecutive values [base, base + values.size()) of sample `seq`.
struct Group {
    std::uint64_t seq = 0;
    long issued = 0; // cycle the sample entered the pipeline
    int base = 0;
    std::vector<std::int64_t> values;
};

/// Complex operand vector of one sample.
struct CxToken {
    std::uint64_t seq = 0;
    long issued = 0;
    std::vector<Cx<std::int64_t>> values;
};

struct StageStats {
    std::string name;
    long active_cycles = 0;
    long starvation_cycles = 0;
    long backpressure_cycles = 0;
    std::uint64_t samples = 0;

    long stall_cycles() const { return starvation_cycles + backpressure_cycles; }
};

/// NBN or IBI stage: PE array, weights memory, output interface.
class StageUnit {
public:
    StageUnit(std::string name, const StageConfig& cfg, WeightsMemory mem)
        : g_(cfg), mem_(std::move(mem)), ar_{cfg.fmt},
          acc_(static_cast<std::size_t>(cfg.pe_count), std::vector<std::int64_t>(std::size_t(g_.mem_slots()))),
          buf_(static_cast<std::size_t>(cfg.inputs)), have_(static_cast<std::size_t>(cfg.inputs)) {
        validate_memory(g_, mem_);
        stats_.name = std::move(name);
    }

    Reg<Group>* in = nullptr;
    Reg<Group> out;

    const StageGeometry& geometry() const { return g_; }
    const StageStats& stats() const { return stats_; }

    void tick(long cycle, Trace* trace) {
        output_interface();
        int active = 0;
        bool stall = false;
        if (g_.schedule() == Schedule::nbn)
            nbn_step(active, stall);
        else
            ibi_step(active, stall);
        if (trace) trace->push_back({cycle, stats_.name, active, stall, out.full()});
    }

private:
    struct Pipe {
        std::uint64_t seq = 0;
        long issued = 0;
        int step = 0;
        std::vector<std::vector<std::int64_t>> acc;
    };

    void output_interface() {
        if (!pipe_ || out.full()) return;
        const int first = g_.schedule() == Schedule::nbn ? pipe_->step * g_.parallel() : 0;
        const int count = g_.schedule() == Schedule::nbn ? g_.parallel() : g_.neurons();
        Group o{pipe_->seq, pipe_->issued, first, {}};
        o.values.reserve(std::size_t(count));
        for (int j = first; j < first + count; ++j) {
            std::vector<std::int64_t> partial;
            for (const auto& s : g_.sites(j)) partial.push_back(pipe_->acc[std::size_t(s.pe)][std::size_t(s.mem)]);
            auto v = tree_reduce(ar_, std::move(partial));
            v = ar_.add(v, bias(j));
            if (g_.config().activation == Activation::relu) v = ar_.relu(v);
            o.values.push_back(v);
        }
        out.v = std::move(o);
        pipe_.reset();
    }

    std::int64_t bias(int neuron) const {
        const int f = mem_.biases.fields;
        return mem_.biases.read(std::size_t(neuron / f), neuron % f);
    }

    void mac(int cycle, bool init, const std::vector<std::int64_t>& x, int& active) {
        for (int p = 0; p < g_.pe_count(); ++p) {
            const auto s = g_.slot(cycle, p);
            if (!s.active()) continue;
            const auto prod = ar_.mul(mem_.weights.read(std::size_t(cycle), p), x[std::size_t(s.input)]);
            auto& a = acc_[std::size_t(p)][std::size_t(s.mem)];
            a = init ? prod : ar_.add(a, prod);
            ++active;
        }
        ++stats_.active_cycles;
    }

    void nbn_step(int& active, bool& stall) {
        if (!in || !in->full()) return;
        const Group& x = *in->v;
        if (x.base != 0 || int(x.values.size()) != g_.inputs())
            throw ConfigError("NBN stage needs the complete input vector of " + std::to_string(g_.inputs()) + " values");
        const int cps = g_.cycles_per_step();
        const bool last_of_step = t_ % cps == cps - 1;
        if (last_of_step && pipe_) {
            stall = true;
            ++stats_.backpressure_cycles;
            return;
        }
        mac(t_, t_ % cps == 0, x.values, active);
        if (last_of_step) {
            pipe_ = Pipe{x.seq, x.issued, t_ / cps, acc_};
            if (t_ == g_.compute_cycles() - 1) {
                in->v.reset();
                ++stats_.samples;
                t_ = 0;
                return;
            }
        }
        ++t_;
    }

    void accept() {
        if (!in || !in->full() || in->v->seq != seq_) return;
        Group x = in->take();
        if (x.base < 0 || x.base + int(x.values.size()) > g_.inputs())
            throw ConfigError("input group exceeds the IBI stage's " + std::to_string(g_.inputs()) + " inputs");
        issued_ = x.issued;
        for (std::size_t i = 0; i < x.values.size(); ++i) {
            buf_[std::size_t(x.base) + i] = x.values[i];
            have_[std::size_t(x.base) + i] = 1;
        }
    }

    void ibi_step(int& active, bool& stall) {
        accept();
        const int k = g_.parallel();
        const int group = t_ / g_.cycles_per_step();
        bool ready = true, any = t_ > 0;
        for (int i = 0; i < g_.inputs(); ++i) any = any || have_[std::size_t(i)];
        for (int i = group * k; i < group * k + k; ++i) ready = ready && have_[std::size_t(i)];
        if (!ready) {
            if (any) {
                stall = true;
                ++stats_.starvation_cycles;
            }
            return;
        }
        const bool last = t_ == g_.compute_cycles() - 1;
        if (last && pipe_) {
            stall = true;
            ++stats_.backpressure_cycles;
            return;
        }
        mac(t_, group == 0, buf_, active);
        if (!last) {
            ++t_;
            return;
        }
        pipe_ = Pipe{seq_, issued_, 0, acc_};
        std::fill(have_.begin(), have_.end(), 0);
        ++seq_;
        ++stats_.samples;
        t_ = 0;
        accept();
    }

    StageGeometry g_;
    WeightsMemory mem_;
    FxArith ar_;
    StageStats stats_;
    std::vector<std::vector<std::int64_t>> acc_; // [pe][slot]
    std::optional<Pipe> pipe_;
    int t_ = 0; // compute cycle within the current sample

    // IBI input buffer for the sample being accumulated
    std::vector<std::int64_t> buf_;
    std::vector<char> have_;
    std::uint64_t seq_ = 0;
    long issued_ = 0;
};

/// Array of complex PEs computing sum_i c_i z_i over K operands in
/// ceil(K / pe) cycles; PE p handles operand t pe + p in cycle t.
/// The front end turns an input token into the operand vector once per
/// sample (delay-line window for the FIR, basis functions for the
/// polynomial canceller).
class ComplexMacUnit {
public:
    using FrontEnd = std::function<void(const CxToken&, std::vector<Cx<std::int64_t>>&)>;

    ComplexMacUnit(std::string name, FxFormat fmt, int operand_count, FieldMemory coeffs, FrontEnd front)
        : ar_{fmt}, k_(operand_count), pe_(coeffs.fields / 2), mem_(std::move(coeffs)), front_(std::move(front)),
          acc_(static_cast<std::size_t>(std::max(pe_, 1))) {
        stats_.name = std::move(name);
        if (k_ < 1) throw ConfigError("complex MAC unit needs at least one operand");
        if (mem_.fields % 2 != 0 || pe_ < 1) throw ConfigError("complex coefficient memory needs two fields per PE");
        if (mem_.q != fmt.total_bits) throw ConfigError("coefficient memory width does not match the datapath format");
        if (mem_.words.size() != std::size_t(cycles())) throw ConfigError("coefficient memory must hold one word per cycle");
    }

    Reg<CxToken>* in = nullptr;
    Reg<CxToken> out; // one value

    int cycles() const { return (k_ + pe_ - 1) / pe_; }
    const StageStats& stats() const { return stats_; }

    void tick(long cycle, Trace* trace) {
        int active = 0;
        bool stall = false;
        if (pipe_ && !out.full()) {
            out.v = CxToken{pipe_->seq, pipe_->issued, {tree_reduce(ar_, std::move(pipe_->acc))}};
            pipe_.reset();
        }
        step(active, stall);
        if (trace) trace->push_back({cycle, stats_.name, active, stall, out.full()});
    }

private:
    struct Pipe {
        std::uint64_t seq = 0;
        long issued = 0;
        std::vector<Cx<std::int64_t>> acc;
    };

    void step(int& active, bool& stall) {
        if (!in || !in->full()) return;
        const bool last = t_ == cycles() - 1;
        if (last && pipe_) {
            stall = true;
            ++stats_.backpressure_cycles;
            return;
        }
        if (t_ == 0) {
            operands_.clear();
            front_(*in->v, operands_);
            if (int(operands_.size()) != k_) throw ConfigError("front end produced the wrong operand count");
        }
        for (int p = 0; p < pe_; ++p) {
            const int i = t_ * pe_ + p;
            if (i >= k_) break;
            const Cx<std::int64_t> c{mem_.read(std::size_t(t_), 2 * p), mem_.read(std::size_t(t_), 2 * p + 1)};
            const auto prod = cmul(ar_, operands_[std::size_t(i)], c);
            acc_[std::size_t(p)] = t_ == 0 ? prod : cadd(ar_, acc_[std::size_t(p)], prod);
            ++active;
        }
        ++stats_.active_cycles;
        if (!last) {
            ++t_;
            return;
        }
        const CxToken x = in->take();
        pipe_ = Pipe{x.seq, x.issued, {acc_.begin(), acc_.begin() + std::min(pe_, k_)}};
        ++stats_.samples;
        t_ = 0;
    }

    FxArith ar_;
    int k_;
    int pe_;
    FieldMemory mem_;
    FrontEnd front_;
    StageStats stats_;
    std::vector<Cx<std::int64_t>> acc_;
    std::vector<Cx<std::int64_t>> operands_;
    std::optional<Pipe> pipe_;
    int t_ = 0;
};

} // namespace fdsic
