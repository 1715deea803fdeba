#pragma once

#include <stdexcept>
#include <string>

namespace nhits {

// Error taxonomy. The CLI maps each class onto a distinct exit code.

/// Invalid configuration or arguments (bad flags, shape mismatches, out-of-range hyperparameters).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed, missing or insufficient input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf in activations, losses or parameters.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nhits
