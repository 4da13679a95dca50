#pragma once

#include <stdexcept>
#include <string>

namespace tdcp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-convergence, singular system, degenerate geometry).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace tdcp
