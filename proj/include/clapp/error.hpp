#pragma once

// =============================================================================
// Error hierarchy
// =============================================================================
// Two families: InputError (bad parameters, files, configuration) and
// NumericError (overflow guard, non-convergence, integration failure). The CLI
// maps them to exit codes 1 and 2.
// =============================================================================

#include <cstdio>
#include <stdexcept>
#include <string>

namespace clapp {

namespace detail {

/// Compact scientific rendering for messages.
inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Samples do not determine a line (all abscissae equal).
class DegenerateDesignError : public InputError {
public:
    using InputError::InputError;
};

/// Requested bracket does not contain a sign change.
class BracketError : public InputError {
public:
    using InputError::InputError;
};

/// Exponential argument exceeded the configured cap.
class RangeError : public NumericError {
public:
    RangeError(const std::string& what, double exponent)
        : NumericError(what), exponent_(exponent) {}

    [[nodiscard]] double exponent() const noexcept { return exponent_; }

private:
    double exponent_;
};

/// Root bracket invalid for a scalar solve.
class SolverError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Iteration cap reached; carries the best iterate found.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double best_iterate)
        : NumericError(what), best_(best_iterate) {}

    [[nodiscard]] double best_iterate() const noexcept { return best_; }

private:
    double best_;
};

}  // namespace clapp
