#pragma once

#include <stdexcept>
#include <string>

namespace jacfast {

// Invalid arguments: parameters outside (-1,1), points off the table, bad shapes.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterations that fail to converge, rank growth beyond the cap, solver blowups.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jacfast
