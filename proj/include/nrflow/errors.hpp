#ifndef NRFLOW_ERRORS_HPP
#define NRFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nrflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Longitudinal speed below the configured floor; slip angles are undefined there.
class DegenerateSpeedError : public Error {
public:
    using Error::Error;
};

/// Predictor Jacobian is numerically singular (condition number above ceiling).
class SingularJacobianError : public Error {
public:
    SingularJacobianError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// A speed profile would require travelling backwards.
class InfeasibleProfileError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation (arc length off the road, etc.).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Scenario configuration failed to parse or validate.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Simulation aborted at a given plant step.
class SimulationAbort : public Error {
public:
    SimulationAbort(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace nrflow

#endif  // NRFLOW_ERRORS_HPP
