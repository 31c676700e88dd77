#pragma once

#include <stdexcept>
#include <string>

namespace ordrisk {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV content, schema mismatch, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// A model could not be fitted, e.g. a binarization left a single class.
class FitError : public Error {
public:
    using Error::Error;
};

/// Invalid run parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ordrisk
