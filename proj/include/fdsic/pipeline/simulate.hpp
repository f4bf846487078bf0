// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file simulate.hpp
 * @brief Drivers for single stages, the NN canceller and the polynomial
 *        canceller.
 *
 * Timing conventions: sample 0 is presented to the first unit in cycle 0.
 * A result is counted when the sink takes it from the last register, so a
 * stage with C compute cycles reports a latency of C + 1. cycles_per_sample
 * is the distance between the last two completed samples.
 *
 * NN canceller:
 *
 *     source -+-> hidden NBN stage -> output IBI stage -+-> combiner -> sink
 *             +-> linear FIR (complex PEs) -------------+
 *
 * The combiner forms lin + 2^s nn from the two output registers.
 *
 * Polynomial canceller: the input interface computes the basis functions of
 * each new sample and shifts them into a delay line of K = L (P+1)(P+3)/4
 * entries; an array of complex PEs accumulates the K products.
 */

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fdsic/error.hpp"
#include "fdsic/fx_cancellers.hpp"
#include "fdsic/kernels.hpp"
#include "fdsic/pipeline/geometry.hpp"
#include "fdsic/pipeline/trace.hpp"
#include "fdsic/pipeline/units.hpp"
#include "fdsic/pipeline/weights_memory.hpp"

namespace fdsic {

/// `input_valid(c)`: a new sample may be presented in cycle c.
/// `output_ready(c)`: the sink accepts a result in cycle c.
struct SimOptions {
    std::function<bool(long)> input_valid;
    std::function<bool(long)> output_ready;
    long max_cycles = 0; // 0: derived from the workload
    Trace* trace = nullptr;
};

struct CycleReport {
    long latency_cycles = 0;
    long first_output_cycles = 0;
    long cycles_per_sample = 0;
    long stall_cycles = 0;
    long total_cycles = 0;
    bool complete = true; // every sample reached the sink
    std::vector<StageStats> stages;
};

namespace detail {

inline bool allowed(const std::function<bool(long)>& f, long c) { return !f || f(c); }

template <class Token>
class Source {
public:
    using Make = std::function<Token(std::size_t)>;
    Source(std::size_t count, Make make, std::function<bool(long)> valid)
        : count_(count), make_(std::move(make)), valid_(std::move(valid)) {}

    Reg<Token>& add_channel() {
        channels_.push_back(std::make_unique<Channel>());
        return channels_.back()->reg;
    }

    /// Prepares what consumers see in cycle + 1.
    void tick(long cycle) {
        if (arrived_ < count_ && allowed(valid_, cycle + 1)) ++arrived_;
        for (auto& ch : channels_) {
            if (ch->reg.full() || ch->next >= arrived_) continue;
            Token t = make_(ch->next);
            t.seq = ch->next;
            t.issued = cycle + 1;
            ch->reg.v = std::move(t);
            ++ch->next;
        }
    }

private:
    struct Channel {
        Reg<Token> reg;
        std::size_t next = 0;
    };
    std::size_t count_;
    Make make_;
    std::function<bool(long)> valid_;
    std::size_t arrived_ = 0;
    std::vector<std::unique_ptr<Channel>> channels_;
};

/// Records completion timing at the sink.
struct Completion {
    std::vector<long> done;  // cycle each sample completed
    long first_output = -1;  // first partial output taken
    long first_issue = 0;

    void finish(CycleReport& r, long cycles, std::size_t expected) const {
        r.total_cycles = cycles;
        r.complete = done.size() == expected;
        if (!done.empty()) r.latency_cycles = done.front() - first_issue;
        if (first_output >= 0) r.first_output_cycles = first_output - first_issue;
        if (done.size() >= 2) r.cycles_per_sample = done[done.size() - 1] - done[done.size() - 2];
        for (const auto& s : r.stages) r.stall_cycles += s.stall_cycles();
        if (done.size() < 2 && !r.stages.empty()) {
            long most = 0;
            for (const auto& s : r.stages) most = std::max(most, s.active_cycles);
            r.cycles_per_sample = most;
        }
    }
};

inline long default_budget(std::size_t samples, long per_sample) {
    return long(samples + 4) * (per_sample + 2) * 4 + 64;
}

} // namespace detail

// --- single stage -----------------------------------------------------------------

struct StageRun {
    std::vector<std::vector<std::int64_t>> outputs;
    CycleReport report;
};

/// Runs one stage over a stream of raw input vectors.
inline StageRun simulate_stage(const StageConfig& cfg, std::span<const std::vector<std::int64_t>> inputs,
                               const WeightsMemory& weights, const SimOptions& opt = {}) {
    StageUnit stage("stage", cfg, weights);
    const auto& g = stage.geometry();
    for (const auto& v : inputs)
        if (int(v.size()) != g.inputs())
            throw ConfigError("stage input vectors must have " + std::to_string(g.inputs()) + " values");

    detail::Source<Group> src(inputs.size(), [&](std::size_t n) { return Group{0, 0, 0, inputs[n]}; }, opt.input_valid);
    stage.in = &src.add_channel();

    StageRun run;
    run.outputs.assign(inputs.size(), std::vector<std::int64_t>(std::size_t(g.neurons())));
    std::vector<int> filled(inputs.size());
    detail::Completion done;
    const long budget = opt.max_cycles > 0 ? opt.max_cycles : detail::default_budget(inputs.size(), g.compute_cycles());

    src.tick(-1);
    long cycle = 0;
    for (; cycle < budget && done.done.size() < inputs.size(); ++cycle) {
        if (stage.out.full() && detail::allowed(opt.output_ready, cycle)) {
            const Group o = stage.out.take();
            if (done.first_output < 0) {
                done.first_output = cycle;
                done.first_issue = o.issued;
            }
            std::copy(o.values.begin(), o.values.end(), run.outputs[o.seq].begin() + o.base);
            filled[o.seq] += int(o.values.size());
            if (filled[o.seq] == g.neurons()) done.done.push_back(cycle);
        }
        stage.tick(cycle, opt.trace);
        src.tick(cycle);
    }
    run.report.stages.push_back(stage.stats());
    done.finish(run.report, cycle, inputs.size());
    run.outputs.resize(done.done.size());
    return run;
}

/// Fixed-point reference of one stage in the same operation order.
inline std::vector<std::int64_t> stage_reference(const StageConfig& cfg, const DynMatrix<std::int64_t>& w,
                                                 const DynVector<std::int64_t>& b, std::span<const std::int64_t> x) {
    const StageGeometry g(cfg);
    FxArith ar{cfg.fmt};
    return dense_layer(ar, w, b, x, g.lanes(), cfg.activation);
}

// --- NN canceller --------------------------------------------------------------------

struct PipelineConfig {
    StageConfig hidden;
    StageConfig output;
    int linear_pe_count = 2;
    int denorm_shift = 0;
};

inline void validate(const PipelineConfig& c) {
    if (c.hidden.schedule != Schedule::nbn || c.output.schedule != Schedule::ibi)
        throw ConfigError("the NN pipeline is an NBN hidden stage followed by an IBI output stage");
    if (c.hidden.neurons != c.output.inputs)
        throw ConfigError("hidden stage neurons (" + std::to_string(c.hidden.neurons) + ") must equal output stage inputs (" +
                          std::to_string(c.output.inputs) + ")");
    if (c.output.neurons != 2) throw ConfigError("the output stage produces the real and imaginary part");
    if (c.hidden.inputs % 2 != 0) throw ConfigError("hidden stage inputs must be 2L");
    if (c.hidden.fmt != c.output.fmt) throw ConfigError("both stages must share one format");
    if (c.linear_pe_count < 1) throw ConfigError("linear PE count must be >= 1");
    StageGeometry{c.hidden};
    StageGeometry{c.output};
}

inline PipelineConfig pipeline_config(const QuantizedNN& m, const HardwareConfig& hw) {
    return {hidden_stage(m.memory, m.hidden, hw.npe_hidden, m.fmt), output_stage(m.hidden, hw.npe_output, m.fmt), hw.linear_pe,
            m.denorm_shift};
}

inline NnLanes pipeline_lanes(const PipelineConfig& c) {
    return {StageGeometry(c.hidden).lanes(), StageGeometry(c.output).lanes(), c.linear_pe_count};
}

struct NnRun {
    std::vector<Cx<std::int64_t>> outputs;
    CycleReport report;
};

inline NnRun simulate_nn_canceller(const PipelineConfig& cfg, const QuantizedNN& m, std::span<const Cx<std::int64_t>> x,
                                   const SimOptions& opt = {}) {
    validate(cfg);
    const int memory = cfg.hidden.inputs / 2;
    if (m.memory != memory || m.hidden != cfg.hidden.neurons || int(m.taps.size()) != memory || m.fmt != cfg.hidden.fmt ||
        m.w1.rows() != m.hidden || m.w1.cols() != 2 * memory || m.w2.rows() != 2 || m.w2.cols() != m.hidden)
        throw ConfigError("quantized NN does not match the pipeline configuration");

    const StageGeometry gh(cfg.hidden), go(cfg.output);
    StageUnit hidden("hidden", cfg.hidden, pack_stage(gh, m.w1, m.b1));
    StageUnit output("output", cfg.output, pack_stage(go, m.w2, m.b2));
    const int lpe = cfg.linear_pe_count;
    ComplexMacUnit fir("linear", m.fmt, memory, pack_complex(std::span<const Cx<std::int64_t>>(m.taps), lpe, m.fmt.total_bits),
                       [](const CxToken& t, std::vector<Cx<std::int64_t>>& ops) { ops = t.values; });

    const std::vector<Cx<std::int64_t>> xs(x.begin(), x.end());
    detail::Source<Group> nn_src(xs.size(), [&](std::size_t n) {
        const auto w = delay_window(xs, n, memory);
        return Group{0, 0, 0, nn_inputs<std::int64_t>(std::span<const Cx<std::int64_t>>(w))};
    }, opt.input_valid);
    detail::Source<CxToken> fir_src(xs.size(), [&](std::size_t n) { return CxToken{0, 0, delay_window(xs, n, memory)}; },
                                    opt.input_valid);
    hidden.in = &nn_src.add_channel();
    fir.in = &fir_src.add_channel();
    output.in = &hidden.out;

    FxArith ar{m.fmt};
    NnRun run;
    run.outputs.reserve(xs.size());
    detail::Completion done;
    const long per = std::max<long>({gh.compute_cycles(), go.compute_cycles(), fir.cycles()});
    const long budget = opt.max_cycles > 0 ? opt.max_cycles : detail::default_budget(xs.size(), per + gh.compute_cycles());

    nn_src.tick(-1);
    fir_src.tick(-1);
    long cycle = 0;
    for (; cycle < budget && run.outputs.size() < xs.size(); ++cycle) {
        if (output.out.full() && fir.out.full() && detail::allowed(opt.output_ready, cycle)) {
            const Group nn = output.out.take();
            const CxToken lin = fir.out.take();
            if (nn.seq != lin.seq) throw NumericError("combiner received samples out of order");
            const Cx<std::int64_t> part{ar.scale_pow2(nn.values[0], cfg.denorm_shift), ar.scale_pow2(nn.values[1], cfg.denorm_shift)};
            run.outputs.push_back(cadd(ar, lin.values[0], part));
            if (done.first_output < 0) {
                done.first_output = cycle;
                done.first_issue = std::min(nn.issued, lin.issued);
            }
            done.done.push_back(cycle);
        }
        output.tick(cycle, opt.trace);
        hidden.tick(cycle, opt.trace);
        fir.tick(cycle, opt.trace);
        nn_src.tick(cycle);
        fir_src.tick(cycle);
    }
    run.report.stages = {hidden.stats(), output.stats(), fir.stats()};
    done.finish(run.report, cycle, xs.size());
    return run;
}

// --- polynomial canceller ------------------------------------------------------------

struct PolyRun {
    std::vector<Cx<std::int64_t>> outputs;
    CycleReport report;
};

/// `x` holds the scaled, quantized input samples.
inline PolyRun simulate_poly_canceller(const QuantizedPoly& m, int complex_pe, std::span<const Cx<std::int64_t>> x,
                                       const SimOptions& opt = {}) {
    const int per_tap = basis_per_tap(m.order);
    const int k = m.memory * per_tap;
    poly_lanes(m.memory, m.order, complex_pe);
    if (int(m.coeffs.size()) != k) throw ConfigError("quantized polynomial has the wrong coefficient count");

    std::vector<Cx<std::int64_t>> history(static_cast<std::size_t>(k));
    FxArith ar{m.fmt};
    std::vector<Cx<std::int64_t>> fresh;
    ComplexMacUnit pes("poly", m.fmt, k, pack_complex(std::span<const Cx<std::int64_t>>(m.coeffs), complex_pe, m.fmt.total_bits),
                       [&](const CxToken& t, std::vector<Cx<std::int64_t>>& ops) {
                           fresh.clear();
                           append_sample_basis(ar, t.values[0], m.order, fresh);
                           std::move_backward(history.begin(), history.end() - per_tap, history.end());
                           std::copy(fresh.begin(), fresh.end(), history.begin());
                           ops = history;
                       });

    detail::Source<CxToken> src(x.size(), [&](std::size_t n) { return CxToken{0, 0, {x[n]}}; }, opt.input_valid);
    pes.in = &src.add_channel();

    PolyRun run;
    run.outputs.reserve(x.size());
    detail::Completion done;
    const long budget = opt.max_cycles > 0 ? opt.max_cycles : detail::default_budget(x.size(), pes.cycles());

    src.tick(-1);
    long cycle = 0;
    for (; cycle < budget && run.outputs.size() < x.size(); ++cycle) {
        if (pes.out.full() && detail::allowed(opt.output_ready, cycle)) {
            const CxToken o = pes.out.take();
            run.outputs.push_back(o.values[0]);
            if (done.first_output < 0) {
                done.first_output = cycle;
                done.first_issue = o.issued;
            }
            done.done.push_back(cycle);
        }
        pes.tick(cycle, opt.trace);
        src.tick(cycle);
    }
    run.report.stages = {pes.stats()};
    done.finish(run.report, cycle, x.size());
    return run;
}

} // namespace fdsic
