#pragma once

#include <stdexcept>
#include <string>

namespace tnid {

// Error taxonomy; the CLI maps these onto exit codes
// (config/usage -> 1, data -> 2, divergence -> 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Result of an operation would exceed the configured element budget.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Bad numeric input (non-finite feature, out-of-range pixel, ...).
class ValueError : public Error {
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

class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace tnid
