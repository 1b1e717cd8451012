#pragma once

#include <stdexcept>
#include <string>

namespace veridebate {

// Caller violated an operation's precondition (bad input, not a runtime fault).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values reached a numerical routine.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace veridebate
