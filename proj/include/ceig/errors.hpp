#pragma once

#include <stdexcept>
#include <string>

namespace ceig {

// Bad user input: malformed files, out-of-range indices, violated preconditions.
struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A solver or iteration failed to reach its tolerance.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ceig
