#ifndef SHAPINT_ERRORS_HPP
#define SHAPINT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace shapint {

// Thrown when an exact enumeration would exceed the configured cap.
// Callers should fall back to the sampling engine.
class ResourceLimitError : public std::runtime_error {
 public:
  explicit ResourceLimitError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an estimator's denominator is identically zero
// (e.g. instability of an all-zero estimate list).
class DegenerateInputError : public std::runtime_error {
 public:
  explicit DegenerateInputError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a numeric routine produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shapint

#endif  // SHAPINT_ERRORS_HPP
