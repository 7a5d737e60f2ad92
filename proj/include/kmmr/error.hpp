#pragma once

#include <stdexcept>
#include <string>

namespace kmmr {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes (see tools/kmmr_cli.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Sample cannot support a data-driven bandwidth (identical points, zero variance).
class DegenerateSample : public Error {
public:
    using Error::Error;
};

class DegenerateKernel : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace kmmr
