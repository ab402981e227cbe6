#pragma once

#include <stdexcept>
#include <string>

namespace nphase {

// Result does not fit in a double.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// Argument outside the mathematical domain (e.g. log|x| at x = 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Parameters outside the validated coverage of an algorithm.
class UnsupportedParameters : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative method or quadrature failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

// Input data that contradicts itself beyond its own uncertainty.
class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fock truncation cannot hold the requested state to the trace target.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A lookup table cannot represent its function to the required accuracy.
class TableBuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Moment data outside the set realizable by any probability distribution.
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace nphase
