// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fdsic;

namespace {

struct Case {
    StageConfig cfg;
    RawMatrix w;
    RawVector b;
    std::vector<std::vector<std::int64_t>> x;
};

Case random_case(const StageConfig& cfg, std::size_t vectors, std::mt19937_64& rng) {
    Case c{cfg, RawMatrix(cfg.neurons, cfg.inputs), RawVector(cfg.neurons), {}};
    for (auto& v : c.w.reshaped()) v = test::random_raw(rng, cfg.fmt);
    for (auto& v : c.b) v = test::random_raw(rng, cfg.fmt);
    c.x.assign(vectors, std::vector<std::int64_t>(std::size_t(cfg.inputs)));
    for (auto& vec : c.x)
        for (auto& v : vec) v = test::random_raw(rng, cfg.fmt);
    return c;
}

StageRun run(const Case& c, const SimOptions& opt = {}) {
    const StageGeometry g(c.cfg);
    return simulate_stage(c.cfg, std::span<const std::vector<std::int64_t>>(c.x), pack_stage(g, c.w, c.b), opt);
}

std::size_t mismatches(const Case& c, const StageRun& r) {
    std::size_t bad = r.outputs.size() == c.x.size() ? 0 : 1;
    for (std::size_t n = 0; n < r.outputs.size(); ++n)
        if (r.outputs[n] != stage_reference(c.cfg, c.w, c.b, c.x[n])) ++bad;
    return bad;
}

std::vector<StageConfig> valid_shapes(int max_dim, int max_pe, FxFormat fmt) {
    std::vector<StageConfig> out;
    for (auto sched : {Schedule::nbn, Schedule::ibi})
        for (int ni = 1; ni <= max_dim; ++ni)
            for (int nn = 1; nn <= max_dim; ++nn)
                for (int npe = 1; npe <= max_pe; ++npe) {
                    const StageConfig cfg{sched, ni, nn, npe, fmt, sched == Schedule::nbn ? Activation::relu : Activation::none};
                    try {
                        StageGeometry g(cfg);
                    } catch (const ConfigError&) {
                        continue;
                    }
                    out.push_back(cfg);
                }
    return out;
}

} // namespace

TEST(Analytic, ClosedForms) {
    const auto h = analytic_performance({Schedule::nbn, 26, 18, 52, {17, 13}, Activation::relu});
    EXPECT_EQ(h.latency, 10);
    EXPECT_EQ(h.cycles_per_sample, 9);
    EXPECT_DOUBLE_EQ(h.throughput, 1.0 / 9);
    EXPECT_FALSE(h.first_output.has_value());
    EXPECT_EQ(h.scheduled_first_output, 2);

    const auto o = analytic_performance({Schedule::ibi, 18, 2, 4, {17, 13}, Activation::none});
    EXPECT_EQ(o.latency, 10);
    EXPECT_DOUBLE_EQ(o.throughput, 1.0 / 9);

    const auto full = analytic_performance({Schedule::nbn, 3, 4, 12, {8, 4}, Activation::relu});
    EXPECT_EQ(full.latency, 2);
    EXPECT_EQ(full.cycles_per_sample, 1);

    const auto seq = analytic_performance({Schedule::nbn, 8, 3, 2, {8, 4}, Activation::relu});
    EXPECT_EQ(seq.first_output, 5);
}

TEST(Analytic, DivisibilityViolationsRejected) {
    EXPECT_THROW(analytic_performance({Schedule::nbn, 26, 18, 40, {17, 13}, Activation::relu}), ConfigError);
    EXPECT_THROW(analytic_performance({Schedule::nbn, 26, 18, 7, {17, 13}, Activation::relu}), ConfigError);
    EXPECT_THROW(analytic_performance({Schedule::nbn, 26, 17, 52, {17, 13}, Activation::relu}), ConfigError);
    EXPECT_THROW(analytic_performance({Schedule::ibi, 18, 2, 3, {17, 13}, Activation::none}), ConfigError);
    EXPECT_THROW(analytic_performance({Schedule::ibi, 17, 2, 4, {17, 13}, Activation::none}), ConfigError);
    EXPECT_THROW(analytic_performance({Schedule::ibi, 0, 2, 4, {17, 13}, Activation::none}), ConfigError);
}

TEST(StageSim, PaperHiddenStage) {
    std::mt19937_64 rng(1);
    const auto c = random_case({Schedule::nbn, 26, 18, 52, {17, 13}, Activation::relu}, 100, rng);
    const auto r = run(c);
    EXPECT_EQ(mismatches(c, r), 0u);
    EXPECT_EQ(r.report.cycles_per_sample, 9);
    EXPECT_EQ(r.report.latency_cycles, 10);
    EXPECT_EQ(r.report.first_output_cycles, 2);
    EXPECT_EQ(r.report.stall_cycles, 0);
}

TEST(StageSim, TimingMatchesClosedFormOnGrid) {
    std::mt19937_64 rng(2);
    const auto shapes = valid_shapes(6, 36, {12, 6});
    ASSERT_GE(shapes.size(), 20u);
    for (const auto& cfg : shapes) {
        const auto c = random_case(cfg, 6, rng);
        const auto r = run(c);
        const auto a = analytic_performance(cfg);
        const std::string tag = std::string(to_string(cfg.schedule)) + " " + std::to_string(cfg.inputs) + "x" +
                                std::to_string(cfg.neurons) + " pe " + std::to_string(cfg.pe_count);
        EXPECT_EQ(r.report.latency_cycles, a.latency) << tag;
        EXPECT_EQ(r.report.cycles_per_sample, a.cycles_per_sample) << tag;
        EXPECT_EQ(r.report.first_output_cycles, a.scheduled_first_output) << tag;
        if (a.first_output) {
            EXPECT_EQ(r.report.first_output_cycles, *a.first_output) << tag;
        }
        EXPECT_EQ(r.report.stall_cycles, 0) << tag;
        EXPECT_EQ(mismatches(c, r), 0u) << tag;
    }
}

// Every valid shape with N_I, N_n <= 4 and Q <= 6, at every F.
TEST(StageSim, ExhaustiveSmallShapesBitExact) {
    std::mt19937_64 rng(3);
    std::size_t trials = 0, bad = 0;
    for (int q = 2; q <= 6; ++q)
        for (int f = 0; f < q; ++f)
            for (const auto& cfg : valid_shapes(4, 16, {q, f})) {
                const auto c = random_case(cfg, 60, rng);
                bad += mismatches(c, run(c));
                trials += c.x.size();
            }
    EXPECT_GE(trials, 100000u);
    EXPECT_EQ(bad, 0u);
}

TEST(StageSim, ZeroWeightsGiveZeroOutputs) {
    std::mt19937_64 rng(4);
    auto c = random_case({Schedule::nbn, 26, 18, 52, {17, 13}, Activation::relu}, 20, rng);
    const auto timing = run(c).report;
    c.w.setZero();
    c.b.setZero();
    const auto r = run(c);
    for (const auto& o : r.outputs)
        for (auto v : o) EXPECT_EQ(v, 0);
    EXPECT_EQ(r.report.cycles_per_sample, timing.cycles_per_sample);
    EXPECT_EQ(r.report.latency_cycles, timing.latency_cycles);
}

TEST(StageSim, DownstreamNeverReady) {
    std::mt19937_64 rng(5);
    const auto c = random_case({Schedule::ibi, 18, 2, 4, {17, 13}, Activation::none}, 10, rng);
    SimOptions opt;
    opt.output_ready = [](long) { return false; };
    opt.max_cycles = 400;
    const auto r = run(c, opt);
    EXPECT_FALSE(r.report.complete);
    EXPECT_TRUE(r.outputs.empty());
    EXPECT_GT(r.report.stall_cycles, 300);

    opt.max_cycles = 800;
    long prev = -1;
    for (long cut : {100L, 200L, 400L}) {
        opt.output_ready = [cut](long cyc) { return cyc >= cut; };
        const auto s = run(c, opt);
        EXPECT_GT(s.report.stall_cycles, prev);
        prev = s.report.stall_cycles;
        EXPECT_EQ(mismatches(c, s), 0u);
    }
}

TEST(StageSim, RandomStallsOnlyChangeTiming) {
    std::mt19937_64 rng(6);
    for (const auto& cfg : {StageConfig{Schedule::nbn, 26, 18, 52, {17, 13}, Activation::relu},
                            StageConfig{Schedule::nbn, 8, 6, 4, {10, 5}, Activation::relu},
                            StageConfig{Schedule::ibi, 18, 2, 4, {17, 13}, Activation::none},
                            StageConfig{Schedule::ibi, 6, 4, 2, {9, 3}, Activation::relu}}) {
        const auto c = random_case(cfg, 200, rng);
        const auto clean = run(c);
        for (int trial = 0; trial < 5; ++trial) {
            auto gen = std::make_shared<std::mt19937_64>(rng());
            SimOptions opt;
            opt.input_valid = [gen](long) { return (*gen)() % 3 != 0; };
            auto gen2 = std::make_shared<std::mt19937_64>(rng());
            opt.output_ready = [gen2](long) { return (*gen2)() % 4 != 0; };
            const auto r = run(c, opt);
            ASSERT_TRUE(r.report.complete);
            EXPECT_EQ(r.outputs, clean.outputs);
            EXPECT_GE(r.report.total_cycles, clean.report.total_cycles);
        }
    }
}

TEST(StageSim, TraceRecordsEveryCycle) {
    std::mt19937_64 rng(7);
    const auto c = random_case({Schedule::nbn, 4, 4, 2, {8, 4}, Activation::relu}, 3, rng);
    Trace trace;
    SimOptions opt;
    opt.trace = &trace;
    const auto r = run(c, opt);
    EXPECT_EQ(long(trace.size()), r.report.total_cycles);
    long active = 0;
    for (const auto& t : trace) active += t.pe_activity;
    EXPECT_EQ(active, 3 * 16);
    std::ostringstream os;
    write_trace_csv(os, trace);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "cycle,stage,pe_activity,stall,outputs_valid");
}

TEST(StageSim, InputSizeMismatchRejected) {
    const StageConfig cfg{Schedule::nbn, 4, 2, 2, {8, 4}, Activation::relu};
    const StageGeometry g(cfg);
    const std::vector<std::vector<std::int64_t>> x{{1, 2, 3}};
    EXPECT_THROW(simulate_stage(cfg, std::span<const std::vector<std::int64_t>>(x), pack_stage(g, RawMatrix::Zero(2, 4), RawVector::Zero(2))),
                 ConfigError);
    auto mem = pack_stage(g, RawMatrix::Zero(2, 4), RawVector::Zero(2));
    mem.biases.words.push_back(mem.biases.words.back());
    const std::vector<std::vector<std::int64_t>> ok{{1, 2, 3, 4}};
    EXPECT_THROW(simulate_stage(cfg, std::span<const std::vector<std::int64_t>>(ok), mem), ConfigError);
}
