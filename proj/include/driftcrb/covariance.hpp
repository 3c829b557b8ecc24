#pragma once

// Drift covariance structure.
//
// With S[n] = sum_{j=0}^{n+tau-2} rho^(2j) (the variance ladder of an AR(1)
// run started tau periods before the first sample), the drift covariance is
// gamma * sigma2 * R with R[i][j] = rho^|i-j| * S[min(i,j)], and the total
// observation covariance is Sigma = sigma2 * (I + gamma * R). Because the
// drift is Markov, R^-1 is exactly tridiagonal, which gives every dense
// operation here an O(N) companion path.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "driftcrb/errors.hpp"
#include "driftcrb/model.hpp"

namespace driftcrb {

/// Variance ladder S[1..N]; drift variance of sample n is gamma*sigma2*S[n].
inline Vector s_ladder(const DriftParams& p, int N) {
  validate_drift_params(p);
  if (N < 1) throw DomainError("N must be >= 1");
  Vector s(N);
  if (p.tau.is_infinite()) {
    // Stationary drift; rho < 1 enforced by validation.
    s.setConstant(1.0 / (1.0 - p.rho * p.rho));
    return s;
  }
  const double r2 = p.rho * p.rho;
  for (int n = 1; n <= N; ++n) {
    const auto terms = static_cast<double>(n) + static_cast<double>(p.tau.periods) - 1.0;
    // S[n] = sum of `terms` powers of rho^2 starting at 1.
    s[n - 1] = (p.rho == 1.0) ? terms : (1.0 - std::pow(r2, terms)) / (1.0 - r2);
  }
  return s;
}

/// Head of the ladder relative to the unit-root limit:
/// varrho_tau = rho^(2 tau) / S[1]; 0 for stationary drift, 1/tau at rho = 1.
inline double varrho_tau(const DriftParams& p) {
  validate_drift_params(p);
  if (p.tau.is_infinite()) return 0.0;
  if (p.rho == 1.0) return 1.0 / static_cast<double>(p.tau.periods);
  const double r2 = p.rho * p.rho;
  const double s1 = (1.0 - std::pow(r2, static_cast<double>(p.tau.periods))) / (1.0 - r2);
  return std::pow(r2, static_cast<double>(p.tau.periods)) / s1;
}

/// Dense drift correlation matrix R (N x N).
inline Matrix drift_covariance(const DriftParams& p, int N) {
  const Vector s = s_ladder(p, N);
  Matrix R(N, N);
  for (int i = 0; i < N; ++i) {
    R(i, i) = s[i];
    double f = 1.0;
    for (int j = i + 1; j < N; ++j) {
      f *= p.rho;
      R(i, j) = R(j, i) = f * s[i];
    }
  }
  return R;
}

namespace detail {

/// Symmetric tridiagonal matrix with constant off-diagonal.
struct SymTridiag {
  Vector diag;
  double off{0.0};

  /// y = A * B column-wise, O(N) per column.
  Matrix apply(const Matrix& B) const {
    const auto N = diag.size();
    Matrix Y(N, B.cols());
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
      for (Eigen::Index i = 0; i < N; ++i) {
        double v = diag[i] * B(i, c);
        if (i > 0) v += off * B(i - 1, c);
        if (i + 1 < N) v += off * B(i + 1, c);
        Y(i, c) = v;
      }
    }
    return Y;
  }

  Matrix dense() const {
    const auto N = diag.size();
    Matrix A = Matrix::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
      A(i, i) = diag[i];
      if (i + 1 < N) A(i, i + 1) = A(i + 1, i) = off;
    }
    return A;
  }
};

/// LDL^T factorization of an SPD SymTridiag; solves many columns in O(N) each.
struct SymTridiagFactor {
  Vector d;    // pivots
  Vector l;    // subdiagonal multipliers
  explicit SymTridiagFactor(const SymTridiag& A) {
    const auto N = A.diag.size();
    d.resize(N);
    l.resize(N > 0 ? N - 1 : 0);
    double prev = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      double di = A.diag[i];
      if (i > 0) {
        const double li = A.off / prev;
        l[i - 1] = li;
        di -= li * A.off;
      }
      if (!(di > 0.0) || !std::isfinite(di)) {
        throw SingularCovarianceError("tridiagonal precision factorization lost positive definiteness");
      }
      d[i] = di;
      prev = di;
    }
  }

  void solve_in_place(Matrix& B) const {
    const auto N = d.size();
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
      for (Eigen::Index i = 1; i < N; ++i) B(i, c) -= l[i - 1] * B(i - 1, c);
      for (Eigen::Index i = 0; i < N; ++i) B(i, c) /= d[i];
      for (Eigen::Index i = N - 2; i >= 0; --i) B(i, c) -= l[i] * B(i + 1, c);
    }
  }
};

/// Tridiagonal R^-1: diag {1 + varrho_tau, 1 + rho^2, ..., 1 + rho^2, 1},
/// off-diagonal -rho. Exact for every N >= 1 (N = 1 degenerates to 1/S[1]).
inline SymTridiag drift_precision_tridiagonal(const DriftParams& p, int N) {
  validate_drift_params(p);
  if (N < 1) throw DomainError("N must be >= 1");
  SymTridiag T;
  T.diag.resize(N);
  if (N == 1) {
    T.diag[0] = 1.0 / s_ladder(p, 1)[0];
    T.off = 0.0;
    return T;
  }
  T.diag.setConstant(1.0 + p.rho * p.rho);
  T.diag[0] = 1.0 + varrho_tau(p);
  T.diag[N - 1] = 1.0;
  T.off = -p.rho;
  return T;
}

}  // namespace detail

/// Closed-form inverse of R as a dense matrix; tridiagonal by construction.
inline Matrix drift_precision_closed(const DriftParams& p, int N) {
  if (N < 2) throw DomainError("closed-form precision needs N >= 2");
  return detail::drift_precision_tridiagonal(p, N).dense();
}

/// Drift correlation, total covariance and the ladder, bundled.
struct CovarianceSet {
  Matrix R;            ///< drift correlation
  Matrix Sigma;        ///< sigma2 * (I + gamma * R)
  Vector s;            ///< variance ladder S[1..N]
  DriftParams params;  ///< parameters the set was built from
  int N{0};
};

inline CovarianceSet total_covariance(const DriftParams& p, int N) {
  CovarianceSet out;
  out.params = p;
  out.N = N;
  out.s = s_ladder(p, N);
  out.R = drift_covariance(p, N);
  out.Sigma = p.sigma2 * (Matrix::Identity(N, N) + p.gamma * out.R);
  return out;
}

/// Sigma^-1 * B in O(N) per column through the tridiagonal precision:
/// (I + gamma R)^-1 = (R^-1 + gamma I)^-1 R^-1.
inline Matrix solve_total_covariance(const DriftParams& p, int N, const Matrix& B) {
  validate_drift_params(p);
  if (B.rows() != N) throw DomainError("column length mismatch in covariance solve");
  if (p.gamma == 0.0) return B / p.sigma2;
  const detail::SymTridiag T = detail::drift_precision_tridiagonal(p, N);
  detail::SymTridiag shifted = T;
  shifted.diag.array() += p.gamma;
  Matrix Y = T.apply(B);
  detail::SymTridiagFactor(shifted).solve_in_place(Y);
  return Y / p.sigma2;
}

/// White-noise and drift parameters a quasi-maximum-likelihood estimator
/// should assume once an extra white variance sigma2_q (for instance from
/// uniform quantization) rides on top of the sensor noise.
struct QuantizedParams {
  double sigma2_tilde{0.0};  ///< sigma2 + sigma2_q
  double gamma_tilde{0.0};   ///< gamma / (1 + sigma2_q / sigma2)
  double sigma2_q{0.0};
  DriftParams adjusted;      ///< original params with (sigma2, gamma) replaced
};

/// The adjusted pair keeps the absolute drift level invariant:
/// sigma2_tilde * gamma_tilde == sigma2 * gamma.
inline QuantizedParams quantization_adjusted_params(const DriftParams& p, double sigma2_q) {
  validate_drift_params(p);
  if (!(sigma2_q >= 0.0) || !std::isfinite(sigma2_q)) {
    throw DomainError("sigma2_q must be nonnegative and finite");
  }
  QuantizedParams q;
  q.sigma2_q = sigma2_q;
  q.sigma2_tilde = p.sigma2 + sigma2_q;
  q.gamma_tilde = p.gamma / (1.0 + sigma2_q / p.sigma2);
  q.adjusted = p;
  q.adjusted.sigma2 = q.sigma2_tilde;
  q.adjusted.gamma = q.gamma_tilde;
  return q;
}

}  // namespace driftcrb
