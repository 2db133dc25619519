#pragma once

#include <stdexcept>
#include <string>

namespace delaysof {

// Violated precondition (bad shapes, bad bounds, malformed input).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite data or a numerical kernel that failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A feasible design whose R block is too ill-conditioned to invert.
class DegenerateSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing solver adapter or similar environment problem.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace delaysof
