#pragma once

#include <stdexcept>
#include <string>

namespace ampex {

/// Bad user-facing configuration: unknown keys, inconsistent shapes requested
/// by a config file, missing paths. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure at runtime: indefinite matrices, non-convergence,
/// zero-norm states. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ampex
