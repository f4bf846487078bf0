// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fdsic;

namespace {

QuantizedNN random_qnn(int memory, int hidden, FxFormat fmt, std::uint64_t seed) {
    auto m = nn_init(memory, hidden, seed);
    std::mt19937_64 rng(seed + 1);
    for (int j = 0; j < hidden; ++j) m.b1(j) = std::normal_distribution<double>(0, 0.2)(rng);
    m.b2 << 0.05, -0.1;
    m.linear.taps = test::random_complex(std::size_t(memory), rng, 0.3);
    m.denorm_shift = -4;
    return quantize_model(m, fmt).first;
}

std::size_t nn_mismatches(const QuantizedNN& m, const PipelineConfig& cfg, const std::vector<Cx<Raw>>& xq, const NnRun& r) {
    std::size_t bad = r.outputs.size() == xq.size() ? 0 : 1;
    const auto lanes = pipeline_lanes(cfg);
    for (std::size_t n = 0; n < r.outputs.size(); ++n) {
        const auto w = delay_window(xq, n, m.memory);
        const auto ref = fx_nn_sample(m, w, lanes);
        if (ref.re != r.outputs[n].re || ref.im != r.outputs[n].im) ++bad;
    }
    return bad;
}

} // namespace

TEST(NnPipeline, PaperConfigurationBitExact) {
    const FxFormat fmt{17, 13};
    const auto m = random_qnn(13, 18, fmt, 1);
    const auto cfg = pipeline_config(m, HardwareConfig{});
    const auto xq = quantize_signal(test::random_signal(10000, 2, 0.7), fmt);
    const auto r = simulate_nn_canceller(cfg, m, xq);
    EXPECT_TRUE(r.report.complete);
    EXPECT_EQ(nn_mismatches(m, cfg, xq, r), 0u);
    EXPECT_EQ(r.report.cycles_per_sample, 9);
    EXPECT_EQ(r.report.latency_cycles, 12);
    ASSERT_EQ(r.report.stages.size(), 3u);
    EXPECT_EQ(r.report.stages[0].stall_cycles(), 0);
    EXPECT_EQ(r.report.stages[1].stall_cycles(), 0);
}

TEST(NnPipeline, HalvedHiddenArrayDominates) {
    const FxFormat fmt{17, 13};
    const auto m = random_qnn(13, 18, fmt, 3);
    auto hw = HardwareConfig{};
    hw.npe_hidden = 26;
    const auto cfg = pipeline_config(m, hw);
    const auto xq = quantize_signal(test::random_signal(500, 4, 0.7), fmt);
    const auto r = simulate_nn_canceller(cfg, m, xq);
    EXPECT_EQ(r.report.cycles_per_sample, 18);
    EXPECT_EQ(nn_mismatches(m, cfg, xq, r), 0u);
}

TEST(NnPipeline, ThroughputIsSlowestStage) {
    const FxFormat fmt{16, 11};
    std::mt19937_64 rng(5);
    for (auto [l, h, npe_h, npe_o, lin] : std::vector<std::array<int, 5>>{
             {4, 6, 8, 2, 1}, {4, 6, 16, 4, 4}, {3, 4, 3, 1, 3}, {5, 10, 20, 4, 5}, {2, 8, 4, 2, 1}}) {
        const auto m = random_qnn(l, h, fmt, rng());
        const auto cfg = pipeline_config(m, HardwareConfig{npe_h, npe_o, lin, 20});
        const auto xq = quantize_signal(test::random_signal(300, rng(), 0.7), fmt);
        const auto r = simulate_nn_canceller(cfg, m, xq);
        const long th = analytic_performance(cfg.hidden).cycles_per_sample;
        const long to = analytic_performance(cfg.output).cycles_per_sample;
        const long tl = (l + lin - 1) / lin;
        EXPECT_EQ(r.report.cycles_per_sample, std::max({th, to, tl})) << l << " " << h << " " << npe_h;
        EXPECT_EQ(nn_mismatches(m, cfg, xq, r), 0u);
    }
}

TEST(NnPipeline, StallsNeverChangeOutputs) {
    const FxFormat fmt{17, 13};
    const auto m = random_qnn(13, 18, fmt, 6);
    const auto cfg = pipeline_config(m, HardwareConfig{});
    const auto xq = quantize_signal(test::random_signal(300, 7, 0.7), fmt);
    const auto clean = simulate_nn_canceller(cfg, m, xq);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto g = std::make_shared<std::mt19937_64>(seed);
        SimOptions opt;
        opt.input_valid = [g](long) { return (*g)() % 5 != 0; };
        opt.output_ready = [g](long) { return (*g)() % 3 != 0; };
        const auto r = simulate_nn_canceller(cfg, m, xq, opt);
        ASSERT_EQ(r.outputs.size(), clean.outputs.size());
        for (std::size_t n = 0; n < r.outputs.size(); ++n) {
            EXPECT_EQ(r.outputs[n].re, clean.outputs[n].re);
            EXPECT_EQ(r.outputs[n].im, clean.outputs[n].im);
        }
    }
}

TEST(NnPipeline, ShapeMismatchRejected) {
    const FxFormat fmt{17, 13};
    const auto m = random_qnn(13, 18, fmt, 8);
    auto cfg = pipeline_config(m, HardwareConfig{});
    const auto xq = quantize_signal(test::random_signal(10, 9), fmt);
    auto bad = cfg;
    bad.output.inputs = 16;
    EXPECT_THROW(simulate_nn_canceller(bad, m, xq), ConfigError);
    bad = cfg;
    bad.output.fmt = {17, 12};
    EXPECT_THROW(simulate_nn_canceller(bad, m, xq), ConfigError);
    const auto other = random_qnn(12, 18, fmt, 8);
    EXPECT_THROW(simulate_nn_canceller(cfg, other, xq), ConfigError);
}

TEST(PolyPipeline, PaperConfigurationBitExact) {
    const FxFormat fmt{23, 8};
    std::mt19937_64 rng(10);
    PolyModel p{13, 7, test::random_complex(260, rng, 0.02)};
    const auto q = quantize_model(p, fmt, 0).first;
    const auto xq = quantize_signal(test::random_signal(10000, 11, 0.7), fmt);
    const auto r = simulate_poly_canceller(q, 20, xq);
    EXPECT_TRUE(r.report.complete);
    EXPECT_EQ(r.report.cycles_per_sample, 13);
    EXPECT_EQ(r.report.latency_cycles, 14);
    std::size_t bad = 0;
    for (std::size_t n = 0; n < xq.size(); ++n) {
        const auto w = delay_window(xq, n, 13);
        const auto ref = fx_poly_sample(q, w, 20);
        if (ref.re != r.outputs[n].re || ref.im != r.outputs[n].im) ++bad;
    }
    EXPECT_EQ(bad, 0u);
}

TEST(PolyPipeline, FirstOrderEqualsFir) {
    const FxFormat fmt{16, 12};
    std::mt19937_64 rng(12);
    const auto taps = test::random_complex(8, rng, 0.3);
    PolyModel p{8, 1, std::vector<Complex>(16)};
    for (int l = 0; l < 8; ++l) p.coeffs[PolyModel::index(1, l, 1, 1)] = taps[std::size_t(l)];
    const auto qp = quantize_model(p, fmt, 0).first;
    const auto ql = quantize_model(LinearModel{taps}, fmt).first;
    const auto xq = quantize_signal(test::random_signal(400, 13, 0.7), fmt);
    const auto r = simulate_poly_canceller(qp, 4, xq);
    EXPECT_EQ(r.report.cycles_per_sample, 4);
    for (std::size_t n = 0; n < xq.size(); ++n) {
        const auto w = delay_window(xq, n, 8);
        const auto ref = fx_linear_sample(ql, w, 4);
        EXPECT_EQ(r.outputs[n].re, ref.re);
        EXPECT_EQ(r.outputs[n].im, ref.im);
    }
}

TEST(PolyPipeline, DivisibilityEnforced) {
    const FxFormat fmt{23, 8};
    PolyModel p{13, 7, std::vector<Complex>(260)};
    const auto q = quantize_model(p, fmt, 0).first;
    const auto xq = quantize_signal(test::random_signal(10, 1), fmt);
    EXPECT_THROW(simulate_poly_canceller(q, 7, xq), ConfigError);
    EXPECT_EQ(simulate_poly_canceller(q, 26, xq).report.cycles_per_sample, 10);
}
