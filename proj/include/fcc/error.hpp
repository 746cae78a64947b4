#pragma once

#include <stdexcept>
#include <string>

namespace fcc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad precision, out-of-range index, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A bit stream or serialized artifact could not be parsed.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// A configuration file or option is malformed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fcc
