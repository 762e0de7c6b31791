#pragma once

#include <stdexcept>
#include <string>

namespace sbo {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quantum number, parameter or argument violates its documented domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Frequency sits within the pole tolerance of a transition energy.
class PoleProximityError : public Error {
public:
    PoleProximityError(const std::string& what, int from, int to)
        : Error(what), from_(from), to_(to) {}
    int from() const noexcept { return from_; }
    int to() const noexcept { return to_; }

private:
    int from_;
    int to_;
};

/// The Green's-function denominator is singular: the evaluation point lies on
/// a phase boundary. Solvers catch this as a signal.
class BoundaryPole : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_delta, int iterations)
        : Error(what), last_delta_(last_delta), iterations_(iterations) {}
    double last_delta() const noexcept { return last_delta_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_delta_;
    int iterations_;
};

/// Complex excitation frequencies or a defective pole matrix: the system is
/// past an instability, or parameters sit on a numerical degeneracy.
class InstabilityError : public Error {
public:
    using Error::Error;
};

/// The dominant eigenvalue of N11(0) is degenerate, so one-particle
/// classification is ambiguous; the two-particle mode decides instead.
class DegenerateModeError : public Error {
public:
    using Error::Error;
};

/// No phase transition inside the search bracket.
class NoTransition : public Error {
public:
    using Error::Error;
};

/// Bad run configuration (carries line/key context in the message).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace sbo
