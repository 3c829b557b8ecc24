#pragma once

// Exact Fisher information and estimation bound for the linear model.
//
// For sensors with covariances Sigma_m the information about the polynomial
// coefficients is J = sum_m X' Sigma_m^-1 X and the variance bound is the
// diagonal of J^-1; for this linear Gaussian model the maximum-likelihood
// estimator attains it exactly. J is accumulated either from explicit dense
// covariances (generic, auditable route) or through the O(N) tridiagonal
// solve of the drift model (fast route); the two agree to rounding.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "driftcrb/covariance.hpp"
#include "driftcrb/errors.hpp"
#include "driftcrb/model.hpp"

namespace driftcrb {

/// Condition limit of the equilibrated information matrix. The raw J is
/// scaled by powers of N along the diagonal, so conditioning is always
/// measured after symmetric diagonal (Jacobi) equilibration, which removes
/// that structural scaling without changing the bound.
inline constexpr double kFimConditionLimit = 1e12;

struct FimExact {
  Matrix J;
  int N{0};
  int order{0};
  int sensor_count{0};
};

/// J from explicit dense covariance matrices, one per sensor.
inline FimExact exact_fim(const Matrix& X, const std::vector<Matrix>& sigmas) {
  if (sigmas.empty()) throw DomainError("need at least one covariance");
  const auto N = X.rows();
  const auto cols = X.cols();
  FimExact out;
  out.N = static_cast<int>(N);
  out.order = static_cast<int>(cols) - 1;
  out.sensor_count = static_cast<int>(sigmas.size());
  out.J = Matrix::Zero(cols, cols);
  for (const Matrix& S : sigmas) {
    if (S.rows() != N || S.cols() != N) throw DomainError("covariance size mismatch");
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
      throw SingularCovarianceError("sensor covariance is not positive definite");
    }
    out.J.noalias() += X.transpose() * llt.solve(X);
  }
  return out;
}

/// J for one drift-model sensor through the tridiagonal precision.
inline FimExact exact_fim(const Matrix& X, const DriftParams& p) {
  FimExact out;
  out.N = static_cast<int>(X.rows());
  out.order = static_cast<int>(X.cols()) - 1;
  out.sensor_count = 1;
  out.J = X.transpose() * solve_total_covariance(p, out.N, X);
  return out;
}

/// J summed over a network of drift-model sensors (information adds).
inline FimExact network_fim(const Matrix& X, const NetworkSpec& net) {
  validate_network(net);
  FimExact out;
  out.N = static_cast<int>(X.rows());
  out.order = static_cast<int>(X.cols()) - 1;
  out.sensor_count = static_cast<int>(net.sensors.size());
  const auto cols = X.cols();
  out.J = Matrix::Zero(cols, cols);
  for (const auto& p : net.sensors) {
    out.J.noalias() += X.transpose() * solve_total_covariance(p, out.N, X);
  }
  return out;
}

struct CrbExact {
  Vector diag;       ///< variance bound per coefficient
  Matrix inverse;    ///< full J^-1
  double condition;  ///< condition number of the equilibrated J
};

/// Inverts J with Jacobi equilibration and a condition guard.
inline CrbExact exact_crb(const FimExact& fim) {
  const auto n = fim.J.rows();
  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = fim.J(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw SingularFimError("information matrix has a nonpositive diagonal");
    }
    scale[i] = 1.0 / std::sqrt(d);
  }
  const Matrix B = scale.asDiagonal() * fim.J * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(B);
  if (eig.info() != Eigen::Success) throw SingularFimError("eigendecomposition failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  CrbExact out;
  out.condition = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || out.condition > kFimConditionLimit) {
    throw SingularFimError("information matrix is numerically singular (equilibrated condition "
                           "exceeds limit)");
  }
  const Matrix Binv =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  out.inverse = scale.asDiagonal() * Binv * scale.asDiagonal();
  out.diag = out.inverse.diagonal();
  return out;
}

/// Variance bound of a sensor network at sample size N, fast route.
inline Vector exact_crb_diag(const NetworkSpec& net, int N, int order) {
  const Matrix X = build_design_matrix(N, order);
  return exact_crb(network_fim(X, net)).diag;
}

inline Vector exact_crb_diag(const DriftParams& p, int N, int order) {
  return exact_crb_diag(NetworkSpec{{p}}, N, order);
}

}  // namespace driftcrb
