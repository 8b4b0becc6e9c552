// errors.hpp: Exception types raised by the solvers and integrators

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinqsd {

// Base class for failures of a numerical method (as opposed to bad input,
// which is reported with std::invalid_argument / std::domain_error).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative steady-state solver did not reach its residual target.
struct NonConvergence : Error {
    NonConvergence(std::string stage, const std::string& what)
        : Error("steady state [" + stage + "]: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }
private:
    std::string stage_;
};

// A second eigenvalue of the generator is numerically indistinguishable from zero.
struct AmbiguousNull : Error {
    using Error::Error;
};

// Superoperator would exceed the configured memory budget.
struct DimensionOverflow : Error {
    using Error::Error;
};

// Stochastic trajectory produced a non-finite label.
struct Blowup : Error {
    Blowup(std::size_t trajectory, double time)
        : Error("trajectory " + std::to_string(trajectory) + " blew up at t=" + std::to_string(time)),
          trajectory_(trajectory), time_(time) {}
    std::size_t trajectory() const noexcept { return trajectory_; }
    double time() const noexcept { return time_; }
private:
    std::size_t trajectory_;
    double time_;
};

// Deterministic flow has no closed orbits (lambda <= 1).
struct NotCyclic : Error {
    using Error::Error;
};

// Zero drive: only the trivial fixed point mu = 0 exists.
struct DegenerateDrive : Error {
    using Error::Error;
};

// Evaluation exactly at the critical point lambda = 1.
struct Critical : Error {
    using Error::Error;
};

// Exact and stochastic estimates disagree on their overlap.
struct MethodMismatch : Error {
    using Error::Error;
};

} // namespace spinqsd
