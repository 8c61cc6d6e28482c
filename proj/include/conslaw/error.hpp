#pragma once

#include <stdexcept>
#include <string>

namespace conslaw {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad configuration, malformed expression, violated
/// precondition on a user-supplied value. The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unphysical or non-finite state reached during a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File system or format problems while reading/writing output files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Message-passing contract violated (tag mismatch, aborted transport).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace conslaw
