#pragma once

#include <stdexcept>
#include <string>

namespace orliczq {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed input: empty sample lists, bad grids, invalid configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

// A numerical routine failed to reach its tolerance.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// The allocation solver could not bracket or converge.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace orliczq
