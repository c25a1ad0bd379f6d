#pragma once

#include <stdexcept>
#include <string>

namespace hqrl {

// Invalid static configuration: unsupported qubit count, malformed preset, ...
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument to an operation: index out of range, shape mismatch, ...
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operation invoked in a state that does not support it (e.g. backward
// without a forward cache).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Numerical diagnostics: statevector norm drift, singular sinusoid fits.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Serialization and filesystem failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hqrl
