#pragma once

#include <stdexcept>
#include <string>

namespace xdiff {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or shape mismatches passed to a library call.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Run configuration rejected during validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// NaN/overflow during a rollout, a failed linear solve, or a singular
// interpolation system.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace xdiff
