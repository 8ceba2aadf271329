// Shared aliases and error types for the qcavity library.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qcavity {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Bad parameters, bad configuration, or a method asked to run outside its
// domain of validity. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A method refusing a request it cannot honour accurately (e.g. series order
// above the stability limit). Carries a hint for the caller.
struct MethodValidityError : ConfigError {
    explicit MethodValidityError(const std::string& msg) : ConfigError(msg) {}
};

// Non-finite state, overflow, or failed iteration. CLI maps this to exit
// code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg, double where = 0.0)
        : std::runtime_error(msg), at(where) {}
    double at;  // offending time or abscissa when meaningful
};

}  // namespace qcavity
