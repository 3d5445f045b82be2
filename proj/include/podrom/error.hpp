#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace podrom {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Preconditions on arguments (dimensions, ranges, malformed files).
class InvalidInput : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    SingularMatrix(const std::string& what, double pivot)
        : Error(what + " (pivot magnitude " + std::to_string(pivot) + ")"), pivot_(pivot) {}
    double pivot() const noexcept { return pivot_; }

private:
    double pivot_;
};

/// Iterative process (Krylov, Newton, time stepping) failed to reach its tolerance.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double residual, std::ptrdiff_t step = -1)
        : Error(what + " (residual " + std::to_string(residual) +
                (step >= 0 ? ", step " + std::to_string(step) : std::string()) + ")"),
          residual_(residual), step_(step) {}
    double residual() const noexcept { return residual_; }
    /// Time-step index at which the failure happened, -1 if not applicable.
    std::ptrdiff_t step() const noexcept { return step_; }

private:
    double residual_;
    std::ptrdiff_t step_;
};

class UnsupportedOrder : public Error {
public:
    using Error::Error;
};

class InvalidRank : public Error {
public:
    using Error::Error;
};

class DegenerateSnapshots : public Error {
public:
    using Error::Error;
};

}  // namespace podrom
