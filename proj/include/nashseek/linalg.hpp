#pragma once

#include <Eigen/Dense>

namespace nashseek::linalg {

// Dense symmetric spectral helpers. Inputs are assumed symmetric; only the
// lower triangle is read by the solver.

inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();  // ascending
}

inline double min_eigenvalue(const Eigen::MatrixXd& a) { return symmetric_eigenvalues(a)(0); }

inline double max_eigenvalue(const Eigen::MatrixXd& a)
{
  const Eigen::VectorXd ev = symmetric_eigenvalues(a);
  return ev(ev.size() - 1);
}

/// Largest singular value.
inline double spectral_norm(const Eigen::MatrixXd& a)
{
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

inline Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace nashseek::linalg
