#pragma once

#include <stdexcept>
#include <string>

namespace habsk {

/// Root of the library's exception hierarchy. The CLI maps the three
/// families below onto process exit codes (config 2, data 3, runtime 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problems with input data: malformed files, empty inputs, coverage gaps.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : DataError(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

class EmptyInputError : public DataError {
public:
    using DataError::DataError;
};

/// Query outside a grid axis with clamping disabled.
class BoundsError : public DataError {
public:
    BoundsError(std::string axis, const std::string& what)
        : DataError(what), axis_(std::move(axis)) {}

    const std::string& axis() const noexcept { return axis_; }

private:
    std::string axis_;
};

/// Grids that do not cover what an episode or comparison needs.
class CoverageError : public DataError {
public:
    CoverageError(std::string axis, const std::string& what)
        : DataError(what), axis_(std::move(axis)) {}

    const std::string& axis() const noexcept { return axis_; }

private:
    std::string axis_;
};

/// Failures during simulation or training.
class RuntimeFailure : public Error {
public:
    using Error::Error;
};

class StateError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class TrainingError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

class ShapeError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

}  // namespace habsk
