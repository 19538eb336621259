#pragma once

#include <stdexcept>
#include <string>

namespace scribseg {

// Argument or input data violates a documented precondition.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// On-disk data cannot be parsed: missing or corrupt header, bad dtype,
// truncated payload. The message names the offending file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite math is required (loss blow-up etc.).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scribseg
