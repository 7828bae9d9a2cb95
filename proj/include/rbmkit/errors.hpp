#pragma once

#include <stdexcept>
#include <string>

namespace rbmkit {

// Base for everything thrown by the library. The CLI maps each subclass
// to a distinct process exit code (see tools/rbmkit.cpp and README).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File missing, unreadable, short read/write.
class IoError : public Error {
public:
    using Error::Error;
};

// Bad magic numbers, malformed containers, corrupt model files.
class FormatError : public Error {
public:
    using Error::Error;
};

// Vector/matrix shapes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A configuration value is outside its documented range.
class ConfigError : public Error {
public:
    using Error::Error;
};

// An exact (enumeration) routine was asked for a model beyond its size guard.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace rbmkit
