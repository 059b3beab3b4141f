#pragma once

#include <stdexcept>
#include <string>

namespace fdl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: bad kernel size, malformed network spec, bad weights.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced during a computation that must stay finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdl
