// SPDX-License-Identifier: Apache-2.0
#pragma once

// Training for the two-layer NN canceller.
//
// The linear canceller is fitted first by least squares; the network learns
// the remaining target y - yhat_lin after it is centered and scaled by a
// power of two so that each component has roughly unit variance. The scale
// exponent becomes the model's denormalization shift and the mean is folded
// into the output biases, so inference needs only a shift.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdsic/cancellers.hpp"
#include "fdsic/error.hpp"

namespace fdsic {

enum class Optimizer { sgd, adam };

inline const char* to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

inline Optimizer parse_optimizer(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adam") return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

struct TrainConfig {
    int epochs = 400;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double lr_decay = 0.99; // per-epoch multiplicative factor
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 1;
    double validation_fraction = 0.1;
};

inline void validate(const TrainConfig& c) {
    if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(c.lr_decay > 0.0 && c.lr_decay <= 1.0)) throw ConfigError("lr_decay must lie in (0, 1]");
    if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in (0, 1)");
}

struct NnGradient {
    double loss = 0.0;
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

/// NN input matrix, one column per sample (2L x N).
inline Eigen::MatrixXd nn_input_matrix(const SignalBuffer& x, int memory) {
    Eigen::MatrixXd in = Eigen::MatrixXd::Zero(2 * memory, Eigen::Index(x.size()));
    for (std::size_t n = 0; n < x.size(); ++n)
        for (int l = 0; l < memory && std::size_t(l) <= n; ++l) {
            in(l, Eigen::Index(n)) = x[n - std::size_t(l)].real();
            in(memory + l, Eigen::Index(n)) = x[n - std::size_t(l)].imag();
        }
    return in;
}

/// Mean squared error over both output components and its gradient.
/// loss = 1/(2B) sum_b |out_b - target_b|^2, columns are samples.
inline NnGradient nn_loss_and_gradient(const NNModel& m, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    const auto batch = double(inputs.cols());
    const Eigen::MatrixXd pre = (m.w1 * inputs).colwise() + m.b1;
    const Eigen::MatrixXd act = pre.cwiseMax(0.0);
    const Eigen::MatrixXd err = ((m.w2 * act).colwise() + m.b2) - targets;

    NnGradient g;
    g.loss = err.squaredNorm() / (2.0 * batch);
    const Eigen::MatrixXd d_out = err / batch;
    g.w2 = d_out * act.transpose();
    g.b2 = d_out.rowwise().sum();
    const Eigen::MatrixXd d_pre = (m.w2.transpose() * d_out).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    g.w1 = d_pre * inputs.transpose();
    g.b1 = d_pre.rowwise().sum();
    return g;
}

inline double nn_loss(const NNModel& m, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    const Eigen::MatrixXd act = ((m.w1 * inputs).colwise() + m.b1).cwiseMax(0.0);
    return (((m.w2 * act).colwise() + m.b2) - targets).squaredNorm() / (2.0 * double(inputs.cols()));
}

/// He-initialized weights, zero biases.
inline NNModel nn_init(int memory, int hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    NNModel m;
    m.memory = memory;
    m.hidden = hidden;
    const double s1 = std::sqrt(2.0 / double(2 * memory));
    const double s2 = std::sqrt(1.0 / double(hidden));
    m.w1 = Eigen::MatrixXd::NullaryExpr(hidden, 2 * memory, [&] { return s1 * gauss(rng); });
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2 = Eigen::MatrixXd::NullaryExpr(2, hidden, [&] { return s2 * gauss(rng); });
    m.b2 = Eigen::VectorXd::Zero(2);
    m.linear.taps.assign(std::size_t(memory), Complex{});
    return m;
}

struct TrainReport {
    double initial_validation_mse = 0.0;
    double final_validation_mse = 0.0;
    int best_epoch = 0;
    double target_mean_re = 0.0;
    double target_mean_im = 0.0;
};

namespace detail {

struct AdamState {
    Eigen::MatrixXd m_w1, v_w1, m_w2, v_w2;
    Eigen::VectorXd m_b1, v_b1, m_b2, v_b2;
    long step = 0;

    explicit AdamState(const NNModel& m)
        : m_w1(Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols())), v_w1(m_w1),
          m_w2(Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols())), v_w2(m_w2),
          m_b1(Eigen::VectorXd::Zero(m.b1.size())), v_b1(m_b1), m_b2(Eigen::VectorXd::Zero(m.b2.size())), v_b2(m_b2) {}
};

template <class P, class G>
void adam_update(P& param, const G& grad, P& mom, P& vel, double lr, long step) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    mom = beta1 * mom + (1.0 - beta1) * grad;
    vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, double(step));
    const double c2 = 1.0 - std::pow(beta2, double(step));
    param.array() -= lr * (mom.array() / c1) / ((vel.array() / c2).sqrt() + eps);
}

} // namespace detail

/// Fits the linear stage, then trains the network on the normalized
/// nonlinear residual. Returns the parameters with the best validation MSE.
inline NNModel nn_train(const SignalBuffer& x, const SignalBuffer& y, int memory, int hidden, const TrainConfig& cfg,
                        TrainReport* report = nullptr) {
    require_pair(x, y);
    validate(cfg);
    if (memory < 1 || hidden < 1) throw ConfigError("NN memory and hidden size must be >= 1");

    const LinearModel linear = ls_estimate_linear(x, y, memory);
    const SignalBuffer lin = linear_predict(linear, x);

    const std::size_t total = x.size();
    Complex mean{};
    for (std::size_t n = 0; n < total; ++n) mean += y[n] - lin[n];
    mean /= double(total);
    double var = 0.0;
    for (std::size_t n = 0; n < total; ++n) var += std::norm(y[n] - lin[n] - mean);
    var /= 2.0 * double(total);
    const int shift = var > 0.0 ? int(std::lround(std::log2(std::sqrt(var)))) : 0;

    const Eigen::MatrixXd inputs = nn_input_matrix(x, memory);
    Eigen::MatrixXd targets(2, Eigen::Index(total));
    for (std::size_t n = 0; n < total; ++n) {
        const Complex t = std::ldexp(1.0, -shift) * (y[n] - lin[n] - mean);
        targets(0, Eigen::Index(n)) = t.real();
        targets(1, Eigen::Index(n)) = t.imag();
    }

    const auto n_val = std::max<std::size_t>(1, std::size_t(std::floor(cfg.validation_fraction * double(total))));
    if (n_val >= total) throw ConfigError("not enough samples to hold out a validation set");
    const std::size_t n_train = total - n_val;
    const Eigen::MatrixXd val_in = inputs.rightCols(Eigen::Index(n_val));
    const Eigen::MatrixXd val_tgt = targets.rightCols(Eigen::Index(n_val));

    NNModel model = nn_init(memory, hidden, cfg.seed);
    NNModel best = model;
    double best_mse = nn_loss(model, val_in, val_tgt);
    const double initial_mse = best_mse;
    int best_epoch = 0;

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<Eigen::Index> order(n_train);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    detail::AdamState adam(model);
    Eigen::MatrixXd batch_in(2 * memory, cfg.batch_size);
    Eigen::MatrixXd batch_tgt(2, cfg.batch_size);
    double lr = cfg.learning_rate;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n_train; start += std::size_t(cfg.batch_size)) {
            const auto b = Eigen::Index(std::min<std::size_t>(std::size_t(cfg.batch_size), n_train - start));
            batch_in.resize(2 * memory, b);
            batch_tgt.resize(2, b);
            for (Eigen::Index i = 0; i < b; ++i) {
                batch_in.col(i) = inputs.col(order[start + std::size_t(i)]);
                batch_tgt.col(i) = targets.col(order[start + std::size_t(i)]);
            }
            const NnGradient g = nn_loss_and_gradient(model, batch_in, batch_tgt);
            if (!std::isfinite(g.loss))
                throw NumericError("NN training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
            if (cfg.optimizer == Optimizer::sgd) {
                model.w1 -= lr * g.w1;
                model.b1 -= lr * g.b1;
                model.w2 -= lr * g.w2;
                model.b2 -= lr * g.b2;
            } else {
                ++adam.step;
                detail::adam_update(model.w1, g.w1, adam.m_w1, adam.v_w1, lr, adam.step);
                detail::adam_update(model.b1, g.b1, adam.m_b1, adam.v_b1, lr, adam.step);
                detail::adam_update(model.w2, g.w2, adam.m_w2, adam.v_w2, lr, adam.step);
                detail::adam_update(model.b2, g.b2, adam.m_b2, adam.v_b2, lr, adam.step);
            }
        }
        const double mse = nn_loss(model, val_in, val_tgt);
        if (!std::isfinite(mse)) throw NumericError("NN validation loss is non-finite at epoch " + std::to_string(epoch));
        if (mse < best_mse) {
            best_mse = mse;
            best = model;
            best_epoch = epoch;
        }
        lr *= cfg.lr_decay;
    }

    best.denorm_shift = shift;
    best.b2(0) += std::ldexp(mean.real(), -shift);
    best.b2(1) += std::ldexp(mean.imag(), -shift);
    best.linear = linear;
    if (report) {
        report->initial_validation_mse = initial_mse;
        report->final_validation_mse = best_mse;
        report->best_epoch = best_epoch;
        report->target_mean_re = mean.real();
        report->target_mean_im = mean.imag();
    }
    return best;
}

} // namespace fdsic
