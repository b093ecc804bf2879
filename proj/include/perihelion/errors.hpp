#ifndef PERIHELION_ERRORS_HPP
#define PERIHELION_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace perihelion {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside an operation's domain (superluminal speed, zero radius, e >= 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Orbit constants that violate one of the admissibility inequalities.
class InadmissibleConstants : public DomainError {
public:
    InadmissibleConstants(std::string inequality, const std::string& detail)
        : DomainError("inadmissible constants: " + inequality + " violated (" + detail + ")"),
          inequality_(std::move(inequality)) {}
    const std::string& inequality() const noexcept { return inequality_; }

private:
    std::string inequality_;
};

/// Iterative solver or quadrature failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Integrator step size fell below the representable minimum.
class StepUnderflow : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

/// A retarded or delayed lookup fell before the start of the stored history.
class HistoryUnderrun : public Error {
public:
    using Error::Error;
};

/// Malformed or invalid ephemeris configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace perihelion

#endif // PERIHELION_ERRORS_HPP
