#pragma once

#include <stdexcept>
#include <string>

namespace blockmix {

/// Structural problems with inputs: bad dimensions, asymmetry, schema mismatch.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite intermediate values or other numerical breakdown.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace blockmix
