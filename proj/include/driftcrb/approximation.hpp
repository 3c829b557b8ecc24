#pragma once

// Closed-form approximation of the colored-noise precision (I + gamma R)^-1.
//
// The key scalar is the smaller root y of
//   y^2 - ((gamma + 1)/rho + rho) y + 1 = 0,  0 < y <= 1,
// which factors the AR(1)-plus-white spectrum. With
//   nu      = y gamma / (rho (1 - y^2)),
//   kappa   = y (rho - y) / (1 - rho y),
//   eta_tau = (1 - y^2) / (1 - rho y + varrho_tau y / rho) - 1,
// the inverse satisfies (I + gamma R)^-1 = I - nu M + O(y^N), where M is a
// symmetric matrix whose entries decay like y^|i-j| away from the diagonal
// and carry boundary corrections eta_tau (top-left, calibration-dependent)
// and kappa (bottom-right). The residual concentrates in the anti-diagonal
// corners and shrinks geometrically in N.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "driftcrb/covariance.hpp"
#include "driftcrb/errors.hpp"
#include "driftcrb/model.hpp"

namespace driftcrb {

/// Scalar constants of the spectral factorization.
struct DriftConstants {
  double y{0.0};
  double nu{0.0};
  double kappa{0.0};
  double eta_tau{0.0};
  double varrho_tau{0.0};
  /// (1 + y) / (1 - y); finite-variance shape factor of the unit-root case,
  /// equal to sqrt(1 + 4/gamma) there. NaN when rho < 1.
  double gamma_tilde_rw{std::numeric_limits<double>::quiet_NaN()};
  double gamma{0.0};
  double rho{0.0};
  Tau tau{1};
};

/// Computes the factorization constants. Requires rho in (0, 1] and
/// gamma >= 0; the pair (rho = 1, gamma = 0) is rejected because the root
/// hits y = 1 and no expansion exists (that corner is plain white noise).
inline DriftConstants drift_constants(double gamma, double rho, Tau tau) {
  validate_drift_params({1.0, gamma, rho, tau});
  if (rho == 0.0) {
    throw DomainError("closed-form constants need rho > 0; rho = 0 reduces to white noise");
  }
  if (rho == 1.0 && gamma == 0.0) {
    throw DomainError("rho = 1 with gamma = 0 has no spectral factorization (no drift present)");
  }
  DriftConstants c;
  c.gamma = gamma;
  c.rho = rho;
  c.tau = tau;
  c.varrho_tau = varrho_tau({1.0, gamma, rho, tau});
  if (gamma == 0.0) {
    // Exact limit: the quadratic factors as (y - rho)(y - 1/rho).
    c.y = rho;
    c.nu = 0.0;
    c.kappa = 0.0;
  } else {
    const double b = (gamma + 1.0) / rho + rho;
    const double disc = std::max(b * b - 4.0, 0.0);
    // Larger root first; the smaller one by the product-of-roots identity
    // y_minus * y_plus = 1, which avoids cancellation.
    const double y_plus = 0.5 * (b + std::sqrt(disc));
    c.y = 1.0 / y_plus;
    c.nu = c.y * gamma / (rho * (1.0 - c.y * c.y));
    c.kappa = c.y * (rho - c.y) / (1.0 - rho * c.y);
  }
  c.eta_tau = (1.0 - c.y * c.y) / (1.0 - rho * c.y + c.varrho_tau * c.y / rho) - 1.0;
  if (rho == 1.0) c.gamma_tilde_rw = (1.0 + c.y) / (1.0 - c.y);
  return c;
}

inline DriftConstants drift_constants(const DriftParams& p) {
  return drift_constants(p.gamma, p.rho, p.tau);
}

/// Structural pieces of M: a zero-diagonal Toeplitz core plus two one-sided
/// corner corrections. M = I + toeplitz + eta_tau * head + kappa * tail,
/// entrywise identical to the assembled matrix.
struct MParts {
  Matrix toeplitz;  ///< y^|i-j| off the diagonal, 0 on it
  Matrix head;      ///< y^(i+j-2) strictly above the anti-diagonal, else 0
  Matrix tail;      ///< y^(2N-i-j) on/below the anti-diagonal, else 0
};

struct ApproxPrecision {
  Matrix M;
  double nu{0.0};
  std::optional<MParts> parts;
};

/// Assembles M for given constants. Entry (i, j), 1-based, is
///   y^|i-j| + eta_tau * y^(i+j-2)   when i + j <= N  (above anti-diagonal),
///   y^|i-j| + kappa  * y^(2N-i-j)   otherwise.
inline ApproxPrecision build_M(const DriftConstants& c, int N, bool with_parts = false) {
  if (N < 2) throw DomainError("M needs N >= 2");
  ApproxPrecision out;
  out.nu = c.nu;
  // One shared power table keeps the decomposition exact entry by entry.
  std::vector<double> yp(2 * N, 0.0);
  yp[0] = 1.0;
  for (int k = 1; k < 2 * N; ++k) yp[k] = yp[k - 1] * c.y;
  out.M.resize(N, N);
  for (int i = 1; i <= N; ++i) {
    for (int j = i; j <= N; ++j) {
      const double core = yp[j - i];
      const double v = (i + j <= N) ? core + c.eta_tau * yp[i + j - 2]
                                    : core + c.kappa * yp[2 * N - i - j];
      out.M(i - 1, j - 1) = v;
      out.M(j - 1, i - 1) = v;
    }
  }
  if (with_parts) {
    MParts parts;
    parts.toeplitz = Matrix::Zero(N, N);
    parts.head = Matrix::Zero(N, N);
    parts.tail = Matrix::Zero(N, N);
    for (int i = 1; i <= N; ++i) {
      for (int j = 1; j <= N; ++j) {
        if (i != j) parts.toeplitz(i - 1, j - 1) = yp[std::abs(i - j)];
        if (i + j <= N) {
          parts.head(i - 1, j - 1) = yp[i + j - 2];
        } else {
          parts.tail(i - 1, j - 1) = yp[2 * N - i - j];
        }
      }
    }
    out.parts = std::move(parts);
  }
  return out;
}

/// Closed-form approximation of (I + gamma R)^-1, namely I - nu M.
inline Matrix approx_precision(const DriftParams& p, int N) {
  const DriftConstants c = drift_constants(p.gamma, p.rho, p.tau);
  ApproxPrecision ap = build_M(c, N);
  Matrix A = -c.nu * ap.M;
  A.diagonal().array() += 1.0;
  return A;
}

/// Quality report of the approximation against a dense inverse.
struct ResidualDiagnostics {
  double max_abs_error{0.0};   ///< max |exact - approx| entrywise
  double y_power_ratio{0.0};   ///< max_abs_error / y^N
  double antidiag_ratio{0.0};  ///< band max over off-band max; the residual
                               ///< should live on the anti-diagonal i+j = N+1
};

inline ResidualDiagnostics residual_diagnostics(const DriftParams& p, int N) {
  validate_drift_params(p);
  const DriftConstants c = drift_constants(p.gamma, p.rho, p.tau);
  const Matrix R = drift_covariance(p, N);
  const Matrix colored = Matrix::Identity(N, N) + p.gamma * R;
  Eigen::LLT<Matrix> llt(colored);
  if (llt.info() != Eigen::Success) {
    throw SingularCovarianceError("I + gamma R is not positive definite");
  }
  const Matrix exact = llt.solve(Matrix::Identity(N, N));
  const Matrix diff = (exact - approx_precision(p, N)).cwiseAbs();

  ResidualDiagnostics d;
  d.max_abs_error = diff.maxCoeff();
  d.y_power_ratio = (c.y > 0.0) ? d.max_abs_error / std::pow(c.y, N) : 0.0;

  // Band region: entries with 1-based indices satisfying |i + j - (N+1)| < w.
  // Everything farther from the anti-diagonal counts as off-band.
  const int w = std::max(2, N / 6);
  double band = 0.0, off_band = 0.0;
  for (int i = 1; i <= N; ++i) {
    for (int j = 1; j <= N; ++j) {
      double& slot = (std::abs(i + j - (N + 1)) < w) ? band : off_band;
      slot = std::max(slot, diff(i - 1, j - 1));
    }
  }
  if (off_band > 0.0) {
    d.antidiag_ratio = band / off_band;
  } else {
    d.antidiag_ratio = (band > 0.0) ? std::numeric_limits<double>::infinity()
                                    : std::numeric_limits<double>::quiet_NaN();
  }
  return d;
}

}  // namespace driftcrb
