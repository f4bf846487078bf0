// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fdsic {

/// Error categories map onto CLI exit codes.
enum class ErrorKind { config = 2, numeric = 3, io = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Malformed file contents (bad magic, truncated payload, ...).
class FormatError : public IoError {
public:
    explicit FormatError(const std::string& what) : IoError(what) {}
};

inline const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

} // namespace fdsic
