#pragma once

#include <stdexcept>
#include <string>

namespace stf {

// Base class for all errors raised by the library. The CLI maps each
// subclass to a distinct process exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value or inconsistent hyper-parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Shape mismatch between tensors; message names the offending shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (CSV rows, NaN inputs, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Missing or unreadable/unwritable file.
class IoError : public Error {
public:
    using Error::Error;
};

// API misuse, e.g. calling backward on a non-scalar loss.
class ContractError : public Error {
public:
    using Error::Error;
};

// Loss diverged or training cannot proceed.
class TrainingError : public Error {
public:
    using Error::Error;
};

// A metric is undefined for the given inputs (e.g. zero valid points).
class MetricsError : public Error {
public:
    using Error::Error;
};

}  // namespace stf
