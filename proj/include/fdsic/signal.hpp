// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file signal.hpp
 * @brief Transmit-signal generation and the synthetic self-interference chain.
 *
 * The transmitter emits a QPSK OFDM waveform. The receive path is modeled
 * as IQ imbalance, followed by a memoryless odd-order power amplifier and a
 * multipath FIR coupling channel, plus circular white Gaussian noise:
 *
 *   u(n) = k1 x(n) + k2 x*(n)
 *   v(n) = sum_{p odd} a_p u(n) |u(n)|^(p-1)
 *   y(n) = sum_l h(l) v(n-l) + w(n)
 *
 * Samples before the start of the buffer are taken as zero.
 */

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fdsic/error.hpp"

namespace fdsic {

using Complex = std::complex<double>;

struct SignalBuffer {
    std::vector<Complex> samples;
    double sample_rate_hz = 20e6;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    const Complex& operator[](std::size_t n) const { return samples[n]; }
    Complex& operator[](std::size_t n) { return samples[n]; }
};

struct OfdmConfig {
    int fft_size = 64;
    int used_subcarriers = 52;
    int cp_length = 16;
    int num_symbols = 400;
    int oversampling = 2;
    std::uint64_t seed = 7;
    double sample_rate_hz = 20e6;
};

/// Odd PA orders modeled by SiChainModel::pa_coeffs, in storage order.
inline constexpr std::array<int, 4> kPaOrders{1, 3, 5, 7};

struct SiChainModel {
    Complex iq_k1{1.0, 0.0};
    Complex iq_k2{0.0, 0.0};
    std::array<Complex, 4> pa_coeffs{Complex{1.0, 0.0}, {}, {}, {}};
    std::vector<Complex> channel_taps{Complex{1.0, 0.0}};
    double noise_power = 0.0;
};

inline void validate(const OfdmConfig& c) {
    if (c.fft_size < 2) throw ConfigError("fft_size must be at least 2");
    if (c.used_subcarriers < 1 || c.used_subcarriers >= c.fft_size)
        throw ConfigError("used_subcarriers must lie in [1, fft_size)");
    if (c.cp_length < 0 || c.cp_length >= c.fft_size) throw ConfigError("cp_length must lie in [0, fft_size)");
    if (c.num_symbols < 0) throw ConfigError("num_symbols must be non-negative");
    if (c.oversampling < 1) throw ConfigError("oversampling must be at least 1");
    if (!(c.sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
}

inline void validate(const SiChainModel& m) {
    if (!(std::abs(m.iq_k2) < std::abs(m.iq_k1))) throw ConfigError("IQ imbalance requires |k2| < |k1|");
    if (m.channel_taps.empty()) throw ConfigError("channel_taps must be nonempty");
    if (!(m.noise_power >= 0.0) || !std::isfinite(m.noise_power)) throw ConfigError("noise_power must be >= 0");
}

/// Exponentially decaying taps rho^l e^{j theta l}, scaled to unit energy.
inline std::vector<Complex> decaying_taps(int count, double rho, double phase_step) {
    std::vector<Complex> taps(std::size_t(std::max(count, 0)));
    double energy = 0.0;
    for (int l = 0; l < count; ++l) {
        taps[std::size_t(l)] = std::polar(std::pow(rho, l), phase_step * l);
        energy += std::norm(taps[std::size_t(l)]);
    }
    for (auto& t : taps) t /= std::sqrt(energy);
    return taps;
}

inline SiChainModel default_si_chain() {
    SiChainModel m;
    m.iq_k1 = {1.0, 0.0};
    m.iq_k2 = std::polar(0.1, 0.3);
    m.pa_coeffs = {Complex{1.0, 0.0}, std::polar(0.004, -0.2), Complex{1e-4, 0.0}, Complex{1e-5, 0.0}};
    m.channel_taps = decaying_taps(8, 0.6, 1.1);
    m.noise_power = 1e-4;
    return m;
}

inline double mean_power(const std::vector<Complex>& s) {
    if (s.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : s) acc += std::norm(v);
    return acc / double(s.size());
}

/// QPSK OFDM with a null DC bin; oversampling zero-pads the IFFT.
inline SignalBuffer generate_tx(const OfdmConfig& cfg) {
    validate(cfg);
    SignalBuffer out;
    out.sample_rate_hz = cfg.sample_rate_hz;

    const int ifft_len = cfg.fft_size * cfg.oversampling;
    const int cp_len = cfg.cp_length * cfg.oversampling;
    const int positive = cfg.used_subcarriers / 2;
    const int negative = cfg.used_subcarriers - positive;

    std::mt19937_64 rng(cfg.seed);
    Eigen::FFT<double> fft;
    std::vector<Complex> freq(static_cast<std::size_t>(ifft_len));
    std::vector<Complex> time;
    out.samples.reserve(std::size_t(cfg.num_symbols) * std::size_t(ifft_len + cp_len));

    const double amp = std::numbers::sqrt2 / 2.0;
    std::uint64_t bits = 0;
    int bits_left = 0;
    auto next_symbol = [&] {
        if (bits_left < 2) {
            bits = rng();
            bits_left = 64;
        }
        const double re = (bits & 1u) ? amp : -amp;
        const double im = (bits & 2u) ? amp : -amp;
        bits >>= 2;
        bits_left -= 2;
        return Complex{re, im};
    };

    for (int s = 0; s < cfg.num_symbols; ++s) {
        std::fill(freq.begin(), freq.end(), Complex{});
        for (int k = 1; k <= positive; ++k) freq[std::size_t(k)] = next_symbol();
        for (int k = 1; k <= negative; ++k) freq[std::size_t(ifft_len - k)] = next_symbol();
        fft.inv(time, freq);
        for (int n = ifft_len - cp_len; n < ifft_len; ++n) out.samples.push_back(time[std::size_t(n)]);
        out.samples.insert(out.samples.end(), time.begin(), time.end());
    }

    const double p = mean_power(out.samples);
    if (p > 0.0) {
        const double g = 1.0 / std::sqrt(p);
        for (auto& v : out.samples) v *= g;
    }
    return out;
}

inline Complex apply_iq(const SiChainModel& m, Complex x) { return m.iq_k1 * x + m.iq_k2 * std::conj(x); }

inline Complex apply_pa(const SiChainModel& m, Complex u) {
    const double mag2 = std::norm(u);
    Complex acc{};
    double env = 1.0; // |u|^(p-1)
    for (std::size_t i = 0; i < kPaOrders.size(); ++i) {
        acc += m.pa_coeffs[i] * u * env;
        env *= mag2;
    }
    return acc;
}

inline SignalBuffer apply_si_chain(const SiChainModel& model, const SignalBuffer& x, std::uint64_t seed) {
    validate(model);
    if (x.empty()) throw ConfigError("apply_si_chain requires a nonempty input buffer");

    const std::size_t n_samples = x.size();
    std::vector<Complex> v(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n) {
        if (!std::isfinite(x[n].real()) || !std::isfinite(x[n].imag()))
            throw NumericError("non-finite sample in transmit buffer at index " + std::to_string(n));
        v[n] = apply_pa(model, apply_iq(model, x[n]));
    }

    SignalBuffer y;
    y.sample_rate_hz = x.sample_rate_hz;
    y.samples.assign(n_samples, Complex{});
    const auto& h = model.channel_taps;
    for (std::size_t n = 0; n < n_samples; ++n) {
        Complex acc{};
        const std::size_t taps = std::min(h.size(), n + 1);
        for (std::size_t l = 0; l < taps; ++l) acc += h[l] * v[n - l];
        y.samples[n] = acc;
    }

    if (model.noise_power > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, std::sqrt(model.noise_power / 2.0));
        for (auto& s : y.samples) s += Complex{gauss(rng), gauss(rng)};
    }
    return y;
}

} // namespace fdsic
