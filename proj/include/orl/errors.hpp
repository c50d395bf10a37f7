#pragma once

#include <stdexcept>

namespace orl {

// Bad inputs: shapes, ranges, malformed files. CLI maps these to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Failures while running: I/O, non-finite losses. CLI maps these to exit code 2.
struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace orl
