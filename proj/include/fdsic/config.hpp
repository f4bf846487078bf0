// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file config.hpp
 * @brief Flat `key = value` run configuration.
 *
 * One key per line, `#` starts a comment. Complex values are written
 * `re:im`, lists are comma separated. Unknown keys are rejected.
 */

#include <charconv>
#include <complex>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fdsic/error.hpp"
#include "fdsic/nn_train.hpp"
#include "fdsic/signal.hpp"

namespace fdsic {

struct RunConfig {
    OfdmConfig ofdm;
    SiChainModel chain = default_si_chain();
    std::uint64_t noise_seed = 11;

    double train_fraction = 0.7; // leading share used for fitting
    double lambda = 0.0;         // ridge term of the LS fits
    TrainConfig train;
};

inline std::size_t split_index(std::size_t n, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    return std::size_t(std::floor(train_fraction * double(n)));
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
    }
}

template <class I>
I parse_int(const std::string& key, const std::string& v) {
    I out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
    return out;
}

inline Complex parse_complex(const std::string& key, const std::string& v) {
    const auto colon = v.find(':');
    if (colon == std::string::npos) return {parse_double(key, v), 0.0};
    return {parse_double(key, trim(v.substr(0, colon))), parse_double(key, trim(v.substr(colon + 1)))};
}

inline std::string format_double(double d) {
    std::ostringstream os;
    os.precision(17);
    os << d;
    return os.str();
}

inline std::string format_complex(Complex z) { return format_double(z.real()) + ":" + format_double(z.imag()); }

} // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "fft_size") c.ofdm.fft_size = parse_int<int>(key, value);
    else if (key == "used_subcarriers") c.ofdm.used_subcarriers = parse_int<int>(key, value);
    else if (key == "cp_length") c.ofdm.cp_length = parse_int<int>(key, value);
    else if (key == "num_symbols") c.ofdm.num_symbols = parse_int<int>(key, value);
    else if (key == "oversampling") c.ofdm.oversampling = parse_int<int>(key, value);
    else if (key == "seed") c.ofdm.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "sample_rate_hz") c.ofdm.sample_rate_hz = parse_double(key, value);
    else if (key == "iq_k1") c.chain.iq_k1 = parse_complex(key, value);
    else if (key == "iq_k2") c.chain.iq_k2 = parse_complex(key, value);
    else if (key == "pa_a1") c.chain.pa_coeffs[0] = parse_complex(key, value);
    else if (key == "pa_a3") c.chain.pa_coeffs[1] = parse_complex(key, value);
    else if (key == "pa_a5") c.chain.pa_coeffs[2] = parse_complex(key, value);
    else if (key == "pa_a7") c.chain.pa_coeffs[3] = parse_complex(key, value);
    else if (key == "channel_taps") {
        c.chain.channel_taps.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) c.chain.channel_taps.push_back(parse_complex(key, trim(item)));
    } else if (key == "noise_power") c.chain.noise_power = parse_double(key, value);
    else if (key == "noise_seed") c.noise_seed = parse_int<std::uint64_t>(key, value);
    else if (key == "train_fraction") c.train_fraction = parse_double(key, value);
    else if (key == "lambda") c.lambda = parse_double(key, value);
    else if (key == "epochs") c.train.epochs = parse_int<int>(key, value);
    else if (key == "batch_size") c.train.batch_size = parse_int<int>(key, value);
    else if (key == "learning_rate") c.train.learning_rate = parse_double(key, value);
    else if (key == "lr_decay") c.train.lr_decay = parse_double(key, value);
    else if (key == "optimizer") c.train.optimizer = parse_optimizer(value);
    else if (key == "train_seed") c.train.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "validation_fraction") c.train.validation_fraction = parse_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

inline void validate(const RunConfig& c) {
    validate(c.ofdm);
    validate(c.chain);
    validate(c.train);
    split_index(1, c.train_fraction);
    if (!(c.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
}

inline RunConfig parse_config(std::istream& is, RunConfig base = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        set_config_value(base, key, value);
    }
    validate(base);
    return base;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file '" + path + "'");
    return parse_config(is);
}

inline void write_config(std::ostream& os, const RunConfig& c) {
    using detail::format_complex;
    using detail::format_double;
    os << "# transmit signal\n";
    os << "fft_size = " << c.ofdm.fft_size << '\n';
    os << "used_subcarriers = " << c.ofdm.used_subcarriers << '\n';
    os << "cp_length = " << c.ofdm.cp_length << '\n';
    os << "num_symbols = " << c.ofdm.num_symbols << '\n';
    os << "oversampling = " << c.ofdm.oversampling << '\n';
    os << "seed = " << c.ofdm.seed << '\n';
    os << "sample_rate_hz = " << format_double(c.ofdm.sample_rate_hz) << '\n';
    os << "# self-interference chain\n";
    os << "iq_k1 = " << format_complex(c.chain.iq_k1) << '\n';
    os << "iq_k2 = " << format_complex(c.chain.iq_k2) << '\n';
    os << "pa_a1 = " << format_complex(c.chain.pa_coeffs[0]) << '\n';
    os << "pa_a3 = " << format_complex(c.chain.pa_coeffs[1]) << '\n';
    os << "pa_a5 = " << format_complex(c.chain.pa_coeffs[2]) << '\n';
    os << "pa_a7 = " << format_complex(c.chain.pa_coeffs[3]) << '\n';
    os << "channel_taps = ";
    for (std::size_t i = 0; i < c.chain.channel_taps.size(); ++i)
        os << (i ? ", " : "") << format_complex(c.chain.channel_taps[i]);
    os << '\n';
    os << "noise_power = " << format_double(c.chain.noise_power) << '\n';
    os << "noise_seed = " << c.noise_seed << '\n';
    os << "# fitting and training\n";
    os << "train_fraction = " << format_double(c.train_fraction) << '\n';
    os << "lambda = " << format_double(c.lambda) << '\n';
    os << "epochs = " << c.train.epochs << '\n';
    os << "batch_size = " << c.train.batch_size << '\n';
    os << "learning_rate = " << format_double(c.train.learning_rate) << '\n';
    os << "lr_decay = " << format_double(c.train.lr_decay) << '\n';
    os << "optimizer = " << to_string(c.train.optimizer) << '\n';
    os << "train_seed = " << c.train.seed << '\n';
    os << "validation_fraction = " << format_double(c.train.validation_fraction) << '\n';
}

} // namespace fdsic
