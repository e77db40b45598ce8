#pragma once

#include <stdexcept>
#include <string>

namespace nesy {

// Raised for bad user input: malformed files, inconsistent config, unknown
// names. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for failures during execution (NaN loss, unwritable output, ...).
// The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nesy
