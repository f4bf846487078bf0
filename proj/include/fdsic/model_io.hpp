// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file model_io.hpp
 * @brief Canceller model files.
 *
 * JSON documents with a format tag, a version and a "kind" of "linear",
 * "poly" or "nn". Complex numbers are [re, im] pairs, real numbers are
 * written with 17 significant digits so a save/load round trip is exact.
 * Polynomial coefficients follow the canonical (l, p, q) order, NN weight
 * matrices are lists of rows.
 */

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fdsic/cancellers.hpp"
#include "fdsic/error.hpp"
#include "fdsic/fx_cancellers.hpp"

namespace fdsic {

inline constexpr int kModelVersion = 1;
inline constexpr const char* kModelFormat = "fdsic-model";

namespace detail {

using nlohmann::json;

inline json to_json_cx(const std::vector<Complex>& v) {
    json a = json::array();
    for (const auto& z : v) a.push_back({z.real(), z.imag()});
    return a;
}

inline json to_json_matrix(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json_vector(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("model file: missing field '") + key + "'");
    return j.at(key);
}

inline double number(const json& j) {
    if (!j.is_number()) throw FormatError("model file: expected a number");
    return j.get<double>();
}

inline int integer(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) throw FormatError(std::string("model file: '") + key + "' must be an integer");
    return v.get<int>();
}

inline std::vector<Complex> from_json_cx(const json& a, std::size_t expected, const char* key) {
    if (!a.is_array() || a.size() != expected)
        throw FormatError(std::string("model file: '") + key + "' must hold " + std::to_string(expected) + " complex values");
    std::vector<Complex> out;
    for (const auto& z : a) {
        if (!z.is_array() || z.size() != 2) throw FormatError(std::string("model file: '") + key + "' entries must be [re, im]");
        out.emplace_back(number(z[0]), number(z[1]));
    }
    return out;
}

inline Eigen::MatrixXd from_json_matrix(const json& a, int rows, int cols, const char* key) {
    if (!a.is_array() || int(a.size()) != rows)
        throw FormatError(std::string("model file: '") + key + "' must have " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = a[std::size_t(r)];
        if (!row.is_array() || int(row.size()) != cols)
            throw FormatError(std::string("model file: '") + key + "' rows must have " + std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c) m(r, c) = number(row[std::size_t(c)]);
    }
    return m;
}

inline Eigen::VectorXd from_json_vector(const json& a, int size, const char* key) {
    if (!a.is_array() || int(a.size()) != size)
        throw FormatError(std::string("model file: '") + key + "' must have " + std::to_string(size) + " entries");
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = number(a[std::size_t(i)]);
    return v;
}

} // namespace detail

inline nlohmann::json model_to_json(const AnyModel& model) {
    using detail::json;
    json j{{"format", kModelFormat}, {"version", kModelVersion}, {"kind", canceller_name(model)}};
    std::visit([&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
            j["memory"] = m.memory();
            j["taps"] = detail::to_json_cx(m.taps);
        } else if constexpr (std::is_same_v<T, PolyModel>) {
            j["memory"] = m.memory;
            j["order"] = m.order;
            j["coeffs"] = detail::to_json_cx(m.coeffs);
        } else {
            j["memory"] = m.memory;
            j["hidden"] = m.hidden;
            j["w1"] = detail::to_json_matrix(m.w1);
            j["b1"] = detail::to_json_vector(m.b1);
            j["w2"] = detail::to_json_matrix(m.w2);
            j["b2"] = detail::to_json_vector(m.b2);
            j["denorm_shift"] = m.denorm_shift;
            j["linear_taps"] = detail::to_json_cx(m.linear.taps);
        }
    }, model);
    return j;
}

inline AnyModel model_from_json(const nlohmann::json& j) {
    using namespace detail;
    if (!j.is_object() || !j.contains("format") || j.at("format") != kModelFormat)
        throw FormatError("model file: not an fdsic model document");
    const int version = integer(j, "version");
    if (version != kModelVersion) throw FormatError("model file: unsupported version " + std::to_string(version));
    const auto& kind = field(j, "kind");
    const int memory = integer(j, "memory");
    if (memory < 1) throw FormatError("model file: memory must be >= 1");
    try {
        if (kind == "linear") return LinearModel{from_json_cx(field(j, "taps"), std::size_t(memory), "taps")};
        if (kind == "poly") {
            PolyModel m;
            m.memory = memory;
            m.order = integer(j, "order");
            validate_order(m.order);
            m.coeffs = from_json_cx(field(j, "coeffs"), PolyModel::coefficient_count(memory, m.order), "coeffs");
            return m;
        }
        if (kind == "nn") {
            NNModel m;
            m.memory = memory;
            m.hidden = integer(j, "hidden");
            if (m.hidden < 1) throw FormatError("model file: hidden must be >= 1");
            m.w1 = from_json_matrix(field(j, "w1"), m.hidden, 2 * memory, "w1");
            m.b1 = from_json_vector(field(j, "b1"), m.hidden, "b1");
            m.w2 = from_json_matrix(field(j, "w2"), 2, m.hidden, "w2");
            m.b2 = from_json_vector(field(j, "b2"), 2, "b2");
            m.denorm_shift = integer(j, "denorm_shift");
            m.linear.taps = from_json_cx(field(j, "linear_taps"), std::size_t(memory), "linear_taps");
            validate(m);
            return m;
        }
    } catch (const ConfigError& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    throw FormatError("model file: unknown kind " + kind.dump());
}

inline std::string model_to_string(const AnyModel& model) { return model_to_json(model).dump(2) + "\n"; }

inline AnyModel model_from_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return model_from_json(j);
}

inline void save_model(const std::string& path, const AnyModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << model_to_string(model);
    if (!os) throw IoError("write to '" + path + "' failed");
}

inline AnyModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return model_from_string(ss.str());
}

} // namespace fdsic
