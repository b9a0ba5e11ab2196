#pragma once

#include <stdexcept>
#include <string>

namespace ospline {

// Bad arguments: out-of-range indices, orders, malformed intervals.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Floating point trouble: failed factorizations, non-finite likelihoods,
// quadrature that does not reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver ran out of iterations.
class IterationError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Malformed input data (CSV schema problems, bad config files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ospline
