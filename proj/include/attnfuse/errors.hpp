#pragma once

#include <stdexcept>
#include <string>

namespace attnfuse {

// Base of every error the library raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input, malformed records, out-of-contract arguments (exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Tensor or image shapes that do not line up.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyRegionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// File system and format problems (exit code 3).
class IoError : public Error {
public:
    using Error::Error;
};

// NaN / Inf during training (exit code 4).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace attnfuse
