#pragma once

#include <stdexcept>
#include <string>

namespace wdp {

// Base class for every error raised by the library. The subclasses map onto
// the CLI exit codes (config 2, data 3, numeric 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite loss or gradient during training.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed model file.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace wdp
