#pragma once

#include <stdexcept>
#include <string>

namespace mdiew {

// Shapes or dimensions that do not fit together.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A parameter outside its admissible range (lambda, efficiency, rates...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Coefficients applied to data taken with a different input-state set.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed serialized input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The correlation table admits no PSD joint POVM; regularize it first.
class InfeasibleTableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The SDP solver stopped without a certified answer.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdiew
