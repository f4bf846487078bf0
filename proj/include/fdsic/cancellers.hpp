// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file cancellers.hpp
 * @brief Floating-point linear, memory-polynomial and NN cancellers with
 *        least-squares estimation.
 *
 *   linear:      yhat(n) = sum_l h(l) x(n-l)
 *   polynomial:  yhat(n) = sum_{p odd <= P} sum_{q=0..p} sum_l h_{p,q}(l) x(n-l)^q conj(x(n-l))^(p-q)
 *   NN:          yhat(n) = linear(n) + 2^s * MLP([Re window, Im window])
 */

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdsic/error.hpp"
#include "fdsic/kernels.hpp"
#include "fdsic/signal.hpp"

namespace fdsic {

struct LinearModel {
    std::vector<Complex> taps;

    int memory() const { return int(taps.size()); }
};

struct PolyModel {
    int memory = 1; // L
    int order = 1;  // P, odd
    std::vector<Complex> coeffs;

    static std::size_t coefficient_count(int memory, int order) {
        return std::size_t(memory) * std::size_t(basis_per_tap(order));
    }

    /// Position of h_{p,q}(l) in `coeffs`.
    static std::size_t index(int order, int l, int p, int q) {
        return std::size_t(l) * std::size_t(basis_per_tap(order)) + std::size_t(basis_per_tap(p - 2)) + std::size_t(q);
    }
};

struct NNModel {
    int memory = 1; // L
    int hidden = 1; // N_h
    Eigen::MatrixXd w1; // N_h x 2L
    Eigen::VectorXd b1; // N_h
    Eigen::MatrixXd w2; // 2 x N_h
    Eigen::VectorXd b2; // 2
    int denorm_shift = 0;
    LinearModel linear;
};

inline void validate_order(int order) {
    if (order < 1 || order % 2 == 0) throw ConfigError("polynomial order P must be a positive odd integer, got " + std::to_string(order));
}

inline void validate(const PolyModel& m) {
    if (m.memory < 1) throw ConfigError("polynomial memory L must be >= 1");
    validate_order(m.order);
    if (m.coeffs.size() != PolyModel::coefficient_count(m.memory, m.order))
        throw ConfigError("polynomial model holds " + std::to_string(m.coeffs.size()) + " coefficients, expected " +
                          std::to_string(PolyModel::coefficient_count(m.memory, m.order)));
}

inline void validate(const NNModel& m) {
    if (m.memory < 1 || m.hidden < 1) throw ConfigError("NN memory and hidden size must be >= 1");
    if (m.w1.rows() != m.hidden || m.w1.cols() != 2 * m.memory || m.b1.size() != m.hidden || m.w2.rows() != 2 ||
        m.w2.cols() != m.hidden || m.b2.size() != 2)
        throw ConfigError("NN weight dimensions inconsistent with L=" + std::to_string(m.memory) +
                          ", N_h=" + std::to_string(m.hidden));
    if (m.linear.memory() != m.memory) throw ConfigError("NN linear stage memory differs from NN memory");
}

/// window[l] = x(n - l), zeros before the start of the buffer.
inline std::vector<Cx<double>> window_at(const SignalBuffer& x, std::size_t n, int memory) {
    std::vector<Cx<double>> w(static_cast<std::size_t>(memory));
    for (int l = 0; l < memory && std::size_t(l) <= n; ++l) w[std::size_t(l)] = to_cx(x[n - std::size_t(l)]);
    return w;
}

inline std::vector<Cx<double>> to_cx(std::span<const Complex> v) {
    std::vector<Cx<double>> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_cx(v[i]);
    return out;
}

inline std::vector<Complex> build_basis(std::span<const Complex> window, int order) {
    validate_order(order);
    FloatArith ar;
    const auto w = to_cx(window);
    const auto b = window_basis(ar, std::span<const Cx<double>>(w), order);
    std::vector<Complex> out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = to_complex(b[i]);
    return out;
}

inline SignalBuffer linear_predict(const LinearModel& model, const SignalBuffer& x) {
    FloatArith ar;
    const auto taps = to_cx(std::span<const Complex>(model.taps));
    SignalBuffer out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto w = window_at(x, n, model.memory());
        out[n] = to_complex(fir_sample(ar, std::span<const Cx<double>>(taps), std::span<const Cx<double>>(w), 1));
    }
    return out;
}

inline SignalBuffer poly_predict(const PolyModel& model, const SignalBuffer& x) {
    validate(model);
    FloatArith ar;
    const auto coeffs = to_cx(std::span<const Complex>(model.coeffs));
    const int per_tap = basis_per_tap(model.order);

    // Basis functions depend on one sample only; compute each once and slide.
    std::vector<Cx<double>> history(coeffs.size());
    std::vector<Cx<double>> fresh;
    SignalBuffer out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        fresh.clear();
        append_sample_basis(ar, to_cx(x[n]), model.order, fresh);
        std::move_backward(history.begin(), history.end() - per_tap, history.end());
        std::copy(fresh.begin(), fresh.end(), history.begin());
        out[n] = to_complex(poly_sum(ar, std::span<const Cx<double>>(coeffs), std::span<const Cx<double>>(history), 1));
    }
    return out;
}

/// NN part of the cancellation signal for one window (linear stage excluded).
inline Complex nn_forward(const NNModel& model, std::span<const Complex> window) {
    validate(model);
    if (int(window.size()) != model.memory)
        throw ConfigError("NN window length " + std::to_string(window.size()) + " != L=" + std::to_string(model.memory));
    FloatArith ar;
    const auto w = to_cx(window);
    return to_complex(nn_part(ar, model, std::span<const Cx<double>>(w), NnLanes{}));
}

/// Full NN canceller output: linear stage plus NN part.
inline SignalBuffer nn_predict(const NNModel& model, const SignalBuffer& x) {
    validate(model);
    FloatArith ar;
    const auto taps = to_cx(std::span<const Complex>(model.linear.taps));
    SignalBuffer out;
    out.sample_rate_hz = x.sample_rate_hz;
    out.samples.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto w = window_at(x, n, model.memory);
        const std::span<const Cx<double>> ws(w);
        const auto lin = fir_sample(ar, std::span<const Cx<double>>(taps), ws, 1);
        const auto nn = nn_part(ar, model, ws, NnLanes{});
        out[n] = to_complex(cadd(ar, lin, nn));
    }
    return out;
}

inline SignalBuffer cancel(const SignalBuffer& y, const SignalBuffer& yhat) {
    if (y.size() != yhat.size())
        throw ConfigError("cancel: length mismatch " + std::to_string(y.size()) + " vs " + std::to_string(yhat.size()));
    SignalBuffer out;
    out.sample_rate_hz = y.sample_rate_hz;
    out.samples.resize(y.size());
    for (std::size_t n = 0; n < y.size(); ++n) out[n] = y[n] - yhat[n];
    return out;
}

// --- least squares ---------------------------------------------------------

/// argmin_h ||A h - b||^2 + lambda ||h||^2 by complete orthogonal decomposition.
inline Eigen::VectorXcd solve_least_squares(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda)) throw ConfigError("ridge regularization must be >= 0");
    if (a.rows() < a.cols())
        throw ConfigError("least squares needs at least as many samples (" + std::to_string(a.rows()) +
                          ") as coefficients (" + std::to_string(a.cols()) + ")");
    if (!a.allFinite() || !b.allFinite()) throw NumericError("least squares input contains non-finite values");
    if (lambda == 0.0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(a);
        if (cod.rank() < a.cols())
            throw NumericError("rank-deficient regressor (rank " + std::to_string(cod.rank()) + " of " +
                               std::to_string(a.cols()) + "); use ridge regularization");
        return cod.solve(b);
    }
    Eigen::MatrixXcd aug(a.rows() + a.cols(), a.cols());
    aug.topRows(a.rows()) = a;
    aug.bottomRows(a.cols()) = Eigen::MatrixXcd::Identity(a.cols(), a.cols()) * std::sqrt(lambda);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(aug.rows());
    rhs.head(b.size()) = b;
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd>(aug).solve(rhs);
}

inline void require_pair(const SignalBuffer& x, const SignalBuffer& y) {
    if (x.size() != y.size())
        throw ConfigError("x/y length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
}

inline Eigen::MatrixXcd linear_regressor(const SignalBuffer& x, int memory) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(Eigen::Index(x.size()), memory);
    for (std::size_t n = 0; n < x.size(); ++n)
        for (int l = 0; l < memory && std::size_t(l) <= n; ++l) a(Eigen::Index(n), l) = x[n - std::size_t(l)];
    return a;
}

inline Eigen::MatrixXcd poly_regressor(const SignalBuffer& x, int memory, int order) {
    const int per_tap = basis_per_tap(order);
    std::vector<Complex> basis_of(x.size() * std::size_t(per_tap));
    for (std::size_t n = 0; n < x.size(); ++n) {
        const Complex one[1] = {x[n]};
        const auto b = build_basis(one, order);
        std::copy(b.begin(), b.end(), basis_of.begin() + std::ptrdiff_t(n * std::size_t(per_tap)));
    }
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(Eigen::Index(x.size()), Eigen::Index(memory) * per_tap);
    for (std::size_t n = 0; n < x.size(); ++n)
        for (int l = 0; l < memory && std::size_t(l) <= n; ++l)
            for (int c = 0; c < per_tap; ++c)
                a(Eigen::Index(n), Eigen::Index(l) * per_tap + c) = basis_of[(n - std::size_t(l)) * std::size_t(per_tap) + std::size_t(c)];
    return a;
}

inline Eigen::VectorXcd to_eigen(const SignalBuffer& s) {
    Eigen::VectorXcd v(Eigen::Index(s.size()));
    for (std::size_t n = 0; n < s.size(); ++n) v(Eigen::Index(n)) = s[n];
    return v;
}

inline LinearModel ls_estimate_linear(const SignalBuffer& x, const SignalBuffer& y, int memory, double lambda = 0.0) {
    require_pair(x, y);
    if (memory < 1) throw ConfigError("linear memory L must be >= 1");
    const Eigen::VectorXcd h = solve_least_squares(linear_regressor(x, memory), to_eigen(y), lambda);
    return LinearModel{std::vector<Complex>(h.data(), h.data() + h.size())};
}

inline PolyModel ls_estimate_poly(const SignalBuffer& x, const SignalBuffer& y, int memory, int order, double lambda = 0.0) {
    require_pair(x, y);
    validate_order(order);
    if (memory < 1) throw ConfigError("polynomial memory L must be >= 1");
    const Eigen::VectorXcd h = solve_least_squares(poly_regressor(x, memory, order), to_eigen(y), lambda);
    return PolyModel{memory, order, std::vector<Complex>(h.data(), h.data() + h.size())};
}

/// First `count` samples of a buffer.
inline SignalBuffer head(const SignalBuffer& s, std::size_t count) {
    SignalBuffer out;
    out.sample_rate_hz = s.sample_rate_hz;
    out.samples.assign(s.samples.begin(), s.samples.begin() + std::ptrdiff_t(std::min(count, s.size())));
    return out;
}

} // namespace fdsic
