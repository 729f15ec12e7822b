#pragma once

#include <stdexcept>
#include <string>

namespace rasim {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad inputs: shape mismatches, schema violations, out-of-range parameters.
// The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem and format failures: missing files, malformed headers,
// truncated payloads. The CLI maps these to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rasim
