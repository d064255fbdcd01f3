#pragma once

#include <stdexcept>
#include <string>

namespace tailar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (caller-side mistake).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data violates a structural requirement (missing edges, bad CSV...).
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not complete (degenerate Gram matrix,
/// failed factorization).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace tailar
