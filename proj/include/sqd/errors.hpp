#pragma once

#include <stdexcept>
#include <string>

namespace sqd {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input text (FCIDUMP, counts files, orbital data, records).
struct ParseError : Error {
  using Error::Error;
};

/// Invalid arguments or configuration values.
struct ConfigError : Error {
  using Error::Error;
};

/// A basis or state exceeds a configured size cap.
struct CapacityError : Error {
  using Error::Error;
};

/// An iterative method failed to converge.
struct ConvergenceError : Error {
  using Error::Error;
};

/// No sampled configuration carries the target particle numbers.
struct EmptySampleError : Error {
  using Error::Error;
};

}  // namespace sqd
