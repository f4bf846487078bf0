// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"

using namespace fdsic;

namespace {

SiChainModel identity_chain() {
    SiChainModel m;
    m.iq_k1 = 1.0;
    m.iq_k2 = 0.0;
    m.pa_coeffs = {Complex{1.0, 0.0}, {}, {}, {}};
    m.channel_taps = {1.0};
    m.noise_power = 0.0;
    return m;
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST(GenerateTx, LengthAndUnitPower) {
    OfdmConfig c;
    c.num_symbols = 100;
    c.seed = 7;
    const auto x = generate_tx(c);
    EXPECT_EQ(x.size(), std::size_t(100 * (64 + 16) * 2));
    EXPECT_NEAR(mean_power(x.samples), 1.0, 0.01);
    EXPECT_DOUBLE_EQ(x.sample_rate_hz, 20e6);
}

TEST(GenerateTx, OversamplingOneAndEmpty) {
    OfdmConfig c;
    c.num_symbols = 10;
    c.oversampling = 1;
    EXPECT_EQ(generate_tx(c).size(), 800u);
    c.num_symbols = 0;
    EXPECT_TRUE(generate_tx(c).empty());
}

TEST(GenerateTx, Deterministic) {
    OfdmConfig c;
    c.num_symbols = 20;
    EXPECT_EQ(generate_tx(c).samples, generate_tx(c).samples);
    OfdmConfig d = c;
    d.seed = 8;
    EXPECT_NE(generate_tx(c).samples, generate_tx(d).samples);
}

TEST(GenerateTx, OnlyUsedSubcarriersCarryEnergy) {
    OfdmConfig c;
    c.num_symbols = 1;
    c.cp_length = 0;
    const auto x = generate_tx(c);
    Eigen::FFT<double> fft;
    std::vector<Complex> freq;
    fft.fwd(freq, x.samples);
    const int n = 128;
    for (int k = 0; k < n; ++k) {
        const bool used = (k >= 1 && k <= 26) || (k >= n - 26);
        if (used)
            EXPECT_GT(std::abs(freq[std::size_t(k)]), 1e-6) << k;
        else
            EXPECT_LT(std::abs(freq[std::size_t(k)]), 1e-9) << k;
    }
}

TEST(GenerateTx, RejectsInvalidConfig) {
    OfdmConfig c;
    c.used_subcarriers = 64;
    EXPECT_THROW(generate_tx(c), ConfigError);
    c = {};
    c.cp_length = 64;
    EXPECT_THROW(generate_tx(c), ConfigError);
    c = {};
    c.oversampling = 0;
    EXPECT_THROW(generate_tx(c), ConfigError);
    c = {};
    c.num_symbols = -1;
    EXPECT_THROW(generate_tx(c), ConfigError);
}

TEST(SiChain, IdentityChainReturnsInput) {
    const auto x = test::random_signal(500, 1);
    EXPECT_EQ(apply_si_chain(identity_chain(), x, 3).samples, x.samples);
}

TEST(SiChain, PureDelay) {
    auto m = identity_chain();
    m.channel_taps = {0.0, 1.0};
    const auto x = test::random_signal(100, 2);
    const auto y = apply_si_chain(m, x, 3);
    EXPECT_EQ(y[0], Complex{});
    for (std::size_t n = 1; n < x.size(); ++n) EXPECT_EQ(y[n], x[n - 1]);
}

TEST(SiChain, MatchesClosedForm) {
    auto m = default_si_chain();
    m.noise_power = 0.0;
    const auto x = test::random_signal(200, 4);
    const auto y = apply_si_chain(m, x, 5);
    for (std::size_t n = 0; n < x.size(); ++n) {
        Complex acc{};
        for (std::size_t l = 0; l < m.channel_taps.size() && l <= n; ++l) {
            const Complex u = m.iq_k1 * x[n - l] + m.iq_k2 * std::conj(x[n - l]);
            const double a = std::abs(u);
            const Complex v = m.pa_coeffs[0] * u + m.pa_coeffs[1] * u * std::pow(a, 2) + m.pa_coeffs[2] * u * std::pow(a, 4) +
                              m.pa_coeffs[3] * u * std::pow(a, 6);
            acc += m.channel_taps[l] * v;
        }
        EXPECT_NEAR(std::abs(y[n] - acc), 0.0, 1e-12);
    }
}

TEST(SiChain, CausalAndNoisePower) {
    auto m = default_si_chain();
    const auto x = test::random_signal(400, 6);
    auto x2 = x;
    for (std::size_t n = 200; n < x2.size(); ++n) x2[n] *= -3.0;
    const auto y = apply_si_chain(m, x, 9), y2 = apply_si_chain(m, x2, 9);
    for (std::size_t n = 0; n < 200; ++n) EXPECT_EQ(y[n], y2[n]);

    auto silent = default_si_chain();
    silent.pa_coeffs = {Complex{}, {}, {}, {}};
    silent.noise_power = 1e-3;
    const auto w = apply_si_chain(silent, test::random_signal(200000, 7), 10);
    EXPECT_NEAR(mean_power(w.samples), 1e-3, 2e-5);
}

TEST(SiChain, RejectsInvalidInputs) {
    auto m = default_si_chain();
    EXPECT_THROW(apply_si_chain(m, SignalBuffer{}, 1), ConfigError);
    m.iq_k2 = 1.5;
    EXPECT_THROW(apply_si_chain(m, test::random_signal(10, 1), 1), ConfigError);
    m = default_si_chain();
    m.channel_taps.clear();
    EXPECT_THROW(apply_si_chain(m, test::random_signal(10, 1), 1), ConfigError);
    m = default_si_chain();
    m.noise_power = -1;
    EXPECT_THROW(apply_si_chain(m, test::random_signal(10, 1), 1), ConfigError);
    auto x = test::random_signal(10, 1);
    x[3] = {std::nan(""), 0.0};
    EXPECT_THROW(apply_si_chain(default_si_chain(), x, 1), NumericError);
}

TEST(SiChain, DecayingTapsHaveUnitEnergy) {
    const auto t = decaying_taps(8, 0.6, 1.1);
    double e = 0;
    for (auto v : t) e += std::norm(v);
    EXPECT_NEAR(e, 1.0, 1e-12);
    EXPECT_GT(std::abs(t[0]), std::abs(t[7]));
}

TEST(SiChain, NonlinearProductsBelowLinearSi) {
    // Nonlinear share of the default chain, relative to the linear SI.
    auto m = default_si_chain();
    m.noise_power = 0.0;
    OfdmConfig oc;
    oc.num_symbols = 50;
    const auto x = generate_tx(oc);
    auto lin = m;
    lin.pa_coeffs = {m.pa_coeffs[0], {}, {}, {}};
    lin.iq_k2 = 0.0;
    const auto y = apply_si_chain(m, x, 1), yl = apply_si_chain(lin, x, 1);
    const double rel = -cancellation_db(y, cancel(y, yl), 0);
    EXPECT_GT(rel, 15.0);
    EXPECT_LT(rel, 45.0);
}

TEST(Dataset, RoundTripIsBitExact) {
    const auto x = test::random_signal(1000, 11), y = test::random_signal(1000, 12);
    const auto path = temp_path("fdsic_rt.fdxd");
    save_dataset(x, y, path);
    const auto d = load_dataset(path);
    EXPECT_EQ(d.x.samples, x.samples);
    EXPECT_EQ(d.y.samples, y.samples);
    EXPECT_DOUBLE_EQ(d.x.sample_rate_hz, 20e6);
    std::filesystem::remove(path);
}

TEST(Dataset, HeaderLayout) {
    const auto x = test::random_signal(3, 1);
    const auto b = encode_dataset(x, x);
    ASSERT_EQ(b.size(), 24u + 3 * 32);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "FDXD");
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(b[8], 3);
}

TEST(Dataset, Errors) {
    const auto x = test::random_signal(10, 1);
    EXPECT_THROW(encode_dataset(x, test::random_signal(9, 1)), ConfigError);
    auto b = encode_dataset(x, x);
    auto truncated = b;
    truncated.resize(b.size() - 5);
    EXPECT_THROW(decode_dataset(truncated), FormatError);
    auto magic = b;
    magic[0] = 'X';
    EXPECT_THROW(decode_dataset(magic), FormatError);
    auto version = b;
    version[4] = 2;
    EXPECT_THROW(decode_dataset(version), FormatError);
    EXPECT_THROW(decode_dataset({'F', 'D'}), FormatError);
    auto huge = b;
    huge[15] = 0x7f;
    EXPECT_THROW(decode_dataset(huge), FormatError);
    EXPECT_THROW(load_dataset("/nonexistent/dir/file.fdxd"), IoError);
}
