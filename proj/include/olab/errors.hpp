#pragma once

#include <stdexcept>
#include <string>

namespace olab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments, malformed input files, mismatched meshes.
class UsageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class UnboundedError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class DecompositionError : public Error {
public:
    explicit DecompositionError(const std::string& what, double packing = 0.0)
        : Error(what), packing_(packing) {}
    double packing() const { return packing_; }

private:
    double packing_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace olab
