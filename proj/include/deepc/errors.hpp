#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace deepc {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or vector shapes that do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A trajectory is too short for the requested operation.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Arguments outside their documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The QP behind a control step was declared infeasible.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Plant state became non-finite.
class SimulationError : public Error {
public:
    using Error::Error;
};

/// Scenario configuration problems. `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("config key '" + key + "': " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

}  // namespace deepc
