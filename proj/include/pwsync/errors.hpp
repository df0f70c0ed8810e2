#pragma once

#include <stdexcept>
#include <string>

namespace pwsync {

/// Invalid argument value or inconsistent dimensions.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix required to be symmetric is not.
class SymmetryError : public ParameterError {
 public:
  SymmetryError(const std::string& what, double max_asymmetry)
      : ParameterError(what), max_asymmetry_(max_asymmetry) {}
  double max_asymmetry() const noexcept { return max_asymmetry_; }

 private:
  double max_asymmetry_;
};

/// A random graph construction failed to produce a connected graph.
class ConnectivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The inputs do not satisfy the hypotheses of a synchronization theorem.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrated state became non-finite or left the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace pwsync
