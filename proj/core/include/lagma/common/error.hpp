#pragma once

#include <stdexcept>
#include <string>

namespace lagma {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing, unknown or out of its documented bounds.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint container could not be read or does not match.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace lagma
