#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace darkspin {

// Invalid physical or numerical arguments (parity, ranges, no dark state).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A computation would exceed the configured memory budget.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& what, std::size_t required_bytes)
      : std::runtime_error(what), required_bytes(required_bytes) {}
  std::size_t required_bytes;
};

// The steady state is not unique where uniqueness was required.
class AmbiguityError : public std::runtime_error {
 public:
  AmbiguityError(const std::string& what, int multiplicity)
      : std::runtime_error(what), multiplicity(multiplicity) {}
  int multiplicity;
};

// ODE or trajectory integration failed (step underflow, non-finite state).
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested tolerance could not be reached.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public std::runtime_error {
 public:
  TimeoutError(const std::string& what, double last_value)
      : std::runtime_error(what), last_value(last_value) {}
  double last_value;
};

}  // namespace darkspin
