#pragma once

#include <stdexcept>
#include <string>

namespace qb {

// Base class for everything thrown on purpose by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: rejected before any numerics run. The CLI maps these to
// exit code 2. `key` names the offending parameter.
class ValidationError : public Error {
public:
    ValidationError(std::string key, const std::string& msg)
        : Error(key + ": " + msg), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class InvalidDimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidCouplingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Not enough levels / samples / window room to produce a meaningful answer.
class InsufficientDataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A time or cutoff parameter lies outside its admissible window.
class CutoffError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Numerical breakdown at runtime (NaN/Inf, failed convergence, blown budget).
// The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SolverError : public NumericalError {
public:
    SolverError(const std::string& msg, double residual)
        : NumericalError(msg + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_ = 0.0;
};

} // namespace qb
