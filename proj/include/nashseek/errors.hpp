#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace nashseek {

/// Malformed input: wrong dimensions, bad ranges, asymmetric data, etc.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A standing assumption of the seeking theory does not hold (connectivity,
/// strong monotonicity).
class AssumptionViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The Nash oracle hit its iteration cap. Carries the best iterate seen.
class OracleFailure : public std::runtime_error {
public:
  OracleFailure(const std::string& what, Eigen::VectorXd best, double best_residual)
      : std::runtime_error(what), best_(std::move(best)), best_residual_(best_residual) {}

  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double best_residual() const noexcept { return best_residual_; }

private:
  Eigen::VectorXd best_;
  double best_residual_;
};

/// Adaptive stepping shrank below the representable minimum.
class StiffnessError : public std::runtime_error {
public:
  StiffnessError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double time() const noexcept { return t_; }

private:
  double t_;
};

}  // namespace nashseek
