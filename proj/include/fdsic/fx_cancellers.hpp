// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file fx_cancellers.hpp
 * @brief Quantized canceller models and their bit-true reference evaluation.
 *
 * All weights, biases, inputs and partial sums of one canceller share a
 * single Q-bit format. The fraction bits are chosen from the largest
 * magnitude seen on a calibration run of the floating-point datapath (see
 * RangeArith), which includes every intermediate of the complex
 * multiplications and adder trees.
 *
 * Optionally the polynomial datapath works on the input scaled by
 * 2^-input_shift so that every basis function stays inside [-1, 1];
 * coefficients of order p are then scaled by 2^(p * input_shift). The
 * default (input_shift = 0) keeps the raw basis range.
 *
 * The reference evaluation uses the PE-array lane order of the hardware
 * configuration (see kernels.hpp), which is what the cycle simulator must
 * reproduce bit for bit.
 */

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fdsic/cancellers.hpp"
#include "fdsic/error.hpp"
#include "fdsic/fixed_point.hpp"
#include "fdsic/kernels.hpp"
#include "fdsic/pipeline/geometry.hpp"

namespace fdsic {

using Raw = std::int64_t;
using RawMatrix = DynMatrix<Raw>;
using RawVector = DynVector<Raw>;

struct QuantizedLinear {
    FxFormat fmt;
    std::vector<Cx<Raw>> taps;
};

struct QuantizedPoly {
    FxFormat fmt;
    int memory = 1;
    int order = 1;
    int input_shift = 0;
    std::vector<Cx<Raw>> coeffs;
};

struct QuantizedNN {
    FxFormat fmt;
    int memory = 1;
    int hidden = 1;
    RawMatrix w1;
    RawVector b1;
    RawMatrix w2;
    RawVector b2;
    int denorm_shift = 0;
    std::vector<Cx<Raw>> taps;
};

/// Dequantization error over every quantized parameter.
struct QuantizationReport {
    double max_abs_error = 0.0;  // over non-saturated parameters
    std::size_t saturated = 0;   // parameters clipped to the format range
    std::size_t count = 0;
};

// --- hardware geometry -------------------------------------------------------

/// PE counts of the macro-pipeline and the polynomial canceller.
struct HardwareConfig {
    int npe_hidden = 52;
    int npe_output = 4;
    int linear_pe = 2;
    int poly_pe = 20;
};

/// Balanced default for an (L, N_h) network: two neurons per cycle in the
/// hidden stage and two inputs per cycle in the output stage when N_h is
/// even (52 / 4 for L = 13), one otherwise.
inline HardwareConfig default_nn_hardware(int memory, int hidden) {
    HardwareConfig hw;
    const int k = hidden % 2 == 0 ? 2 : 1;
    hw.npe_hidden = 2 * memory * k;
    hw.npe_output = 2 * k;
    hw.linear_pe = 2;
    return hw;
}

/// Largest PE count <= 20 that divides the basis size.
inline int default_poly_pe(int memory, int order) {
    const int k = memory * basis_per_tap(order);
    for (int pe = std::min(20, k); pe > 1; --pe)
        if (k % pe == 0) return pe;
    return 1;
}

inline StageConfig hidden_stage(int memory, int hidden, int npe, FxFormat fmt) {
    return {Schedule::nbn, 2 * memory, hidden, npe, fmt, Activation::relu};
}

inline StageConfig output_stage(int hidden, int npe, FxFormat fmt) {
    return {Schedule::ibi, hidden, 2, npe, fmt, Activation::none};
}

/// Lane counts implied by the macro-pipeline geometry (validates it).
inline NnLanes nn_lanes(int memory, int hidden, const HardwareConfig& hw, FxFormat fmt = {16, 8}) {
    if (hw.linear_pe < 1) throw ConfigError("linear PE count must be >= 1");
    NnLanes lanes;
    lanes.hidden = StageGeometry(hidden_stage(memory, hidden, hw.npe_hidden, fmt)).lanes();
    lanes.output = StageGeometry(output_stage(hidden, hw.npe_output, fmt)).lanes();
    lanes.linear = hw.linear_pe;
    return lanes;
}

inline int poly_lanes(int memory, int order, int pe) {
    const int k = memory * basis_per_tap(order);
    if (pe < 1 || k % pe != 0)
        throw ConfigError("polynomial basis size " + std::to_string(k) + " is not divisible by " + std::to_string(pe) +
                          " complex PEs");
    return pe;
}

// --- quantization ------------------------------------------------------------

namespace detail {

struct Quantizer {
    FxFormat fmt;
    QuantizationReport report;

    Raw operator()(double v) {
        const Raw r = quantize(v, fmt).raw;
        ++report.count;
        const double lo = fx::to_double(fmt.min_raw(), fmt) - fmt.resolution() / 2;
        const double hi = fx::to_double(fmt.max_raw(), fmt) + fmt.resolution() / 2;
        if (v < lo || v > hi)
            ++report.saturated;
        else
            report.max_abs_error = std::max(report.max_abs_error, std::abs(fx::to_double(r, fmt) - v));
        return r;
    }
    Cx<Raw> operator()(Complex z) { return {(*this)(z.real()), (*this)(z.imag())}; }
};

} // namespace detail

inline std::pair<QuantizedLinear, QuantizationReport> quantize_model(const LinearModel& m, FxFormat fmt) {
    validate(fmt);
    detail::Quantizer q{fmt, {}};
    QuantizedLinear out{fmt, {}};
    for (const auto& t : m.taps) out.taps.push_back(q(t));
    return {out, q.report};
}

inline std::pair<QuantizedPoly, QuantizationReport> quantize_model(const PolyModel& m, FxFormat fmt, int input_shift) {
    validate(fmt);
    validate(m);
    detail::Quantizer q{fmt, {}};
    QuantizedPoly out{fmt, m.memory, m.order, input_shift, {}};
    out.coeffs.reserve(m.coeffs.size());
    for (int l = 0; l < m.memory; ++l)
        for (int p = 1; p <= m.order; p += 2)
            for (int qq = 0; qq <= p; ++qq)
                out.coeffs.push_back(q(std::ldexp(1.0, p * input_shift) * m.coeffs[PolyModel::index(m.order, l, p, qq)]));
    return {out, q.report};
}

inline std::pair<QuantizedNN, QuantizationReport> quantize_model(const NNModel& m, FxFormat fmt) {
    validate(fmt);
    validate(m);
    detail::Quantizer q{fmt, {}};
    QuantizedNN out;
    out.fmt = fmt;
    out.memory = m.memory;
    out.hidden = m.hidden;
    out.denorm_shift = m.denorm_shift;
    out.w1 = m.w1.unaryExpr([&](double v) { return q(v); });
    out.b1 = m.b1.unaryExpr([&](double v) { return q(v); });
    out.w2 = m.w2.unaryExpr([&](double v) { return q(v); });
    out.b2 = m.b2.unaryExpr([&](double v) { return q(v); });
    for (const auto& t : m.linear.taps) out.taps.push_back(q(t));
    return {out, q.report};
}

inline Cx<Raw> quantize_sample(Complex z, const FxFormat& fmt, int input_shift = 0) {
    return {fx::quantize_raw(std::ldexp(z.real(), -input_shift), fmt), fx::quantize_raw(std::ldexp(z.imag(), -input_shift), fmt)};
}

inline std::vector<Cx<Raw>> quantize_signal(const SignalBuffer& x, const FxFormat& fmt, int input_shift = 0) {
    std::vector<Cx<Raw>> out(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = quantize_sample(x[n], fmt, input_shift);
    return out;
}

inline Complex dequantize(const Cx<Raw>& v, const FxFormat& fmt) {
    return {fx::to_double(v.re, fmt), fx::to_double(v.im, fmt)};
}

template <class T>
std::vector<T> delay_window(const std::vector<T>& x, std::size_t n, int memory) {
    std::vector<T> w(static_cast<std::size_t>(memory));
    for (int l = 0; l < memory && std::size_t(l) <= n; ++l) w[std::size_t(l)] = x[n - std::size_t(l)];
    return w;
}

// --- calibration -------------------------------------------------------------

/// Input shift that brings the peak sample modulus to at most 1.
inline int poly_input_shift(const SignalBuffer& x) {
    double peak = 0.0;
    for (const auto& v : x.samples) peak = std::max(peak, std::abs(v));
    return peak > 0.0 ? int(std::ceil(std::log2(peak))) : 0;
}

inline double nn_dynamic_range(const NNModel& m, const NnLanes& lanes, const SignalBuffer& x) {
    RangeArith ar;
    auto seen = [&](double v) { ar.observe(v); };
    m.w1.unaryExpr([&](double v) { seen(v); return v; }).eval();
    m.b1.unaryExpr([&](double v) { seen(v); return v; }).eval();
    m.w2.unaryExpr([&](double v) { seen(v); return v; }).eval();
    m.b2.unaryExpr([&](double v) { seen(v); return v; }).eval();
    const auto taps = to_cx(std::span<const Complex>(m.linear.taps));
    for (const auto& t : taps) { seen(t.re); seen(t.im); }
    for (std::size_t n = 0; n < x.size(); ++n) {
        seen(x[n].real());
        seen(x[n].imag());
        const auto w = window_at(x, n, m.memory);
        const std::span<const Cx<double>> ws(w);
        const auto lin = fir_sample(ar, std::span<const Cx<double>>(taps), ws, lanes.linear);
        cadd(ar, lin, nn_part(ar, m, ws, lanes));
    }
    return ar.max_abs;
}

inline double poly_dynamic_range(const PolyModel& m, int input_shift, int lanes, const SignalBuffer& x) {
    RangeArith ar;
    std::vector<Cx<double>> coeffs;
    for (int l = 0; l < m.memory; ++l)
        for (int p = 1; p <= m.order; p += 2)
            for (int q = 0; q <= p; ++q) {
                const Complex c = std::ldexp(1.0, p * input_shift) * m.coeffs[PolyModel::index(m.order, l, p, q)];
                coeffs.push_back(to_cx(c));
                ar.observe(c.real());
                ar.observe(c.imag());
            }
    const int per_tap = basis_per_tap(m.order);
    std::vector<Cx<double>> history(coeffs.size());
    std::vector<Cx<double>> fresh;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const Cx<double> xs{ar.observe(std::ldexp(x[n].real(), -input_shift)), ar.observe(std::ldexp(x[n].imag(), -input_shift))};
        fresh.clear();
        append_sample_basis(ar, xs, m.order, fresh);
        std::move_backward(history.begin(), history.end() - per_tap, history.end());
        std::copy(fresh.begin(), fresh.end(), history.begin());
        poly_sum(ar, std::span<const Cx<double>>(coeffs), std::span<const Cx<double>>(history), lanes);
    }
    return ar.max_abs;
}

inline double linear_dynamic_range(const LinearModel& m, int lanes, const SignalBuffer& x) {
    RangeArith ar;
    const auto taps = to_cx(std::span<const Complex>(m.taps));
    for (const auto& t : taps) { ar.observe(t.re); ar.observe(t.im); }
    for (std::size_t n = 0; n < x.size(); ++n) {
        ar.observe(x[n].real());
        ar.observe(x[n].imag());
        const auto w = window_at(x, n, m.memory());
        fir_sample(ar, std::span<const Cx<double>>(taps), std::span<const Cx<double>>(w), lanes);
    }
    return ar.max_abs;
}

// --- bit-true reference evaluation -------------------------------------------

inline Cx<Raw> fx_linear_sample(const QuantizedLinear& m, std::span<const Cx<Raw>> window, int lanes) {
    FxArith ar{m.fmt};
    return fir_sample(ar, std::span<const Cx<Raw>>(m.taps), window, lanes);
}

inline Cx<Raw> fx_nn_sample(const QuantizedNN& m, std::span<const Cx<Raw>> window, const NnLanes& lanes) {
    FxArith ar{m.fmt};
    const auto lin = fir_sample(ar, std::span<const Cx<Raw>>(m.taps), window, lanes.linear);
    return cadd(ar, lin, nn_part(ar, m, window, lanes));
}

/// Polynomial output for a window of (already scaled and quantized) samples.
inline Cx<Raw> fx_poly_sample(const QuantizedPoly& m, std::span<const Cx<Raw>> window, int lanes) {
    FxArith ar{m.fmt};
    const auto basis = window_basis(ar, window, m.order);
    return poly_sum(ar, std::span<const Cx<Raw>>(m.coeffs), std::span<const Cx<Raw>>(basis), lanes);
}

inline SignalBuffer fx_linear_predict(const QuantizedLinear& m, const SignalBuffer& x, int lanes) {
    const auto xq = quantize_signal(x, m.fmt);
    SignalBuffer out{std::vector<Complex>(x.size()), x.sample_rate_hz};
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto w = delay_window(xq, n, int(m.taps.size()));
        out[n] = dequantize(fx_linear_sample(m, w, lanes), m.fmt);
    }
    return out;
}

inline SignalBuffer fx_nn_predict(const QuantizedNN& m, const SignalBuffer& x, const NnLanes& lanes) {
    const auto xq = quantize_signal(x, m.fmt);
    SignalBuffer out{std::vector<Complex>(x.size()), x.sample_rate_hz};
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto w = delay_window(xq, n, m.memory);
        out[n] = dequantize(fx_nn_sample(m, w, lanes), m.fmt);
    }
    return out;
}

inline SignalBuffer fx_poly_predict(const QuantizedPoly& m, const SignalBuffer& x, int lanes) {
    FxArith ar{m.fmt};
    const auto xq = quantize_signal(x, m.fmt, m.input_shift);
    const int per_tap = basis_per_tap(m.order);
    std::vector<Cx<Raw>> history(m.coeffs.size());
    std::vector<Cx<Raw>> fresh;
    SignalBuffer out{std::vector<Complex>(x.size()), x.sample_rate_hz};
    for (std::size_t n = 0; n < x.size(); ++n) {
        fresh.clear();
        append_sample_basis(ar, xq[n], m.order, fresh);
        std::move_backward(history.begin(), history.end() - per_tap, history.end());
        std::copy(fresh.begin(), fresh.end(), history.begin());
        out[n] = dequantize(poly_sum(ar, std::span<const Cx<Raw>>(m.coeffs), std::span<const Cx<Raw>>(history), lanes), m.fmt);
    }
    return out;
}

// --- any-model convenience ----------------------------------------------------

using AnyModel = std::variant<LinearModel, PolyModel, NNModel>;

inline const char* canceller_name(const AnyModel& m) {
    switch (m.index()) {
    case 0: return "linear";
    case 1: return "poly";
    default: return "nn";
    }
}

inline int model_memory(const AnyModel& m) {
    return std::visit([](const auto& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LinearModel>) return v.memory();
        else return v.memory;
    }, m);
}

inline SignalBuffer predict(const AnyModel& m, const SignalBuffer& x) {
    return std::visit([&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinearModel>) return linear_predict(v, x);
        else if constexpr (std::is_same_v<T, PolyModel>) return poly_predict(v, x);
        else return nn_predict(v, x);
    }, m);
}

/// Result of evaluating a model in fixed point at one total bit-width.
struct FxEvaluation {
    FxFormat fmt;
    int input_shift = 0;
    QuantizationReport quantization;
    SignalBuffer prediction;
};

struct FxOptions {
    int frac_bits = -1;         // < 0: calibrate
    bool poly_prescale = false; // scale the poly input into [-1, 1]
};

/// Calibrates F on `calibration`, quantizes, and runs the bit-true reference.
inline FxEvaluation fx_evaluate(const AnyModel& model, int total_bits, const SignalBuffer& calibration,
                                const SignalBuffer& x, const FxOptions& opt = {}) {
    const int frac_bits = opt.frac_bits;
    FxEvaluation ev;
    std::visit([&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
            const int lanes = HardwareConfig{}.linear_pe;
            const int f = frac_bits >= 0 ? frac_bits : calibrate_frac_bits(total_bits, linear_dynamic_range(m, lanes, calibration));
            ev.fmt = {total_bits, f};
            auto [q, rep] = quantize_model(m, ev.fmt);
            ev.quantization = rep;
            ev.prediction = fx_linear_predict(q, x, lanes);
        } else if constexpr (std::is_same_v<T, PolyModel>) {
            const int lanes = poly_lanes(m.memory, m.order, default_poly_pe(m.memory, m.order));
            ev.input_shift = opt.poly_prescale ? poly_input_shift(calibration) : 0;
            const int f = frac_bits >= 0 ? frac_bits
                                         : calibrate_frac_bits(total_bits, poly_dynamic_range(m, ev.input_shift, lanes, calibration));
            ev.fmt = {total_bits, f};
            auto [q, rep] = quantize_model(m, ev.fmt, ev.input_shift);
            ev.quantization = rep;
            ev.prediction = fx_poly_predict(q, x, lanes);
        } else {
            const NnLanes lanes = nn_lanes(m.memory, m.hidden, default_nn_hardware(m.memory, m.hidden));
            const int f = frac_bits >= 0 ? frac_bits : calibrate_frac_bits(total_bits, nn_dynamic_range(m, lanes, calibration));
            ev.fmt = {total_bits, f};
            auto [q, rep] = quantize_model(m, ev.fmt);
            ev.quantization = rep;
            ev.prediction = fx_nn_predict(q, x, lanes);
        }
    }, model);
    return ev;
}

} // namespace fdsic
