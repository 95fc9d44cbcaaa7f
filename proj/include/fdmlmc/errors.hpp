#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdmlmc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Grids, fields or plans that do not fit together.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Caller broke a stated precondition (e.g. a time step above the CFL bound).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Singular or non-finite linear algebra.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Newton did not reach the residual target.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

// MLMC tolerance too small for the requested hierarchy.
class ToleranceError : public Error {
public:
    using Error::Error;
};

// Configuration text or values rejected; line is 0 when not tied to a line.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A solve inside an estimator failed; carries the sample coordinates.
class SampleError : public Error {
public:
    SampleError(int level, std::size_t index, const std::string& cause)
        : Error("sample (level " + std::to_string(level) + ", index " + std::to_string(index) +
                ") failed: " + cause),
          level_(level), index_(index) {}

    int level() const noexcept { return level_; }
    std::size_t index() const noexcept { return index_; }

private:
    int level_;
    std::size_t index_;
};

} // namespace fdmlmc
