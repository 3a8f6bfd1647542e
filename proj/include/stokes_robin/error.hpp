#pragma once

#include <stdexcept>
#include <string>

namespace stokes_robin {

/// Invalid input: bad geometry, inconsistent objects, rejected configuration.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration file problems. `key()` names the offending entry when known.
class ConfigError : public InputError {
public:
    ConfigError(std::string key, const std::string& message)
        : InputError(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Numerical failure inside a solver (factorization, NaN, divergence).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stokes_robin
