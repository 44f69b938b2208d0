#pragma once

#include <stdexcept>
#include <string>

namespace snapcube {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A domain-type invariant does not hold. `invariant()` names it.
class ValidationError : public Error {
public:
    ValidationError(std::string invariant, const std::string& detail)
        : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Divergence, non-finite iterates, failed fits.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace snapcube
