#pragma once

// Observation model shared by the whole library.
//
// Sensor m observes  z[n,m] = x[n] + d[n,m] + w[n,m],  n = 1..N, where
//   x[n] = sum_{p=0}^{P} beta[p] * n^p         (polynomial signal),
//   w[n,m] ~ N(0, sigma2_m)                    (white noise),
//   d[n+1,m] = rho_m * d[n,m] + delta[n,m]     (AR(1) drift),
//   delta ~ N(0, gamma_m * sigma2_m).
// The drift was last reset tau_m sampling periods before the first
// observation (d[1 - tau] = 0); tau = infinity means the drift has reached
// its stationary law, which requires rho < 1.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "driftcrb/errors.hpp"

namespace driftcrb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Calibration age: number of sampling periods since the drift was reset.
/// Infinity is a distinct state (stationary drift), not a large number.
struct Tau {
  static constexpr std::int64_t kInfiniteMark = -1;

  std::int64_t periods{1};

  static constexpr Tau infinite() { return Tau{kInfiniteMark}; }
  constexpr bool is_infinite() const { return periods == kInfiniteMark; }

  friend constexpr bool operator==(Tau a, Tau b) { return a.periods == b.periods; }
};

/// Noise parameters of one sensor.
struct DriftParams {
  double sigma2{1.0};  ///< white-noise variance, > 0
  double gamma{0.0};   ///< drift-to-noise variance ratio, >= 0
  double rho{0.0};     ///< AR(1) coefficient, in [0, 1]
  Tau tau{1};          ///< calibration age, >= 1 or infinite
};

/// Validates one sensor's parameters and returns them unchanged.
/// Throws DomainError on out-of-range values and InfiniteCrbError for the
/// uncalibrated unit-root combination (rho = 1, tau = infinity), whose
/// drift variance is unbounded.
inline const DriftParams& validate_drift_params(const DriftParams& p) {
  if (!(p.sigma2 > 0.0) || !std::isfinite(p.sigma2)) {
    throw DomainError("sigma2 must be positive and finite, got " + std::to_string(p.sigma2));
  }
  if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma)) {
    throw DomainError("gamma must be nonnegative and finite, got " + std::to_string(p.gamma));
  }
  if (!(p.rho >= 0.0 && p.rho <= 1.0)) {
    throw DomainError("rho must lie in [0, 1], got " + std::to_string(p.rho));
  }
  if (!p.tau.is_infinite() && p.tau.periods < 1) {
    throw DomainError("tau must be >= 1 or infinite, got " + std::to_string(p.tau.periods));
  }
  if (p.tau.is_infinite() && p.rho == 1.0) {
    throw InfiniteCrbError(
        "uncalibrated unit-root drift has unbounded variance; no finite bound exists");
  }
  return p;
}

/// Polynomial signal: x[n] = sum_p beta[p] n^p, order P = beta.size() - 1.
struct SignalSpec {
  int order{0};
  Vector beta;  ///< length order + 1; may be empty when only bounds are needed
};

inline const SignalSpec& validate_signal(const SignalSpec& s) {
  if (s.order < 0) throw DomainError("polynomial order must be >= 0");
  if (s.beta.size() != 0 && s.beta.size() != s.order + 1) {
    throw DomainError("beta length must equal order + 1");
  }
  return s;
}

/// Largest integer magnitude a double represents exactly.
inline constexpr double kExactIntegerLimit = 9007199254740992.0;  // 2^53

/// Design matrix of the polynomial regression: X(n, p) = n^p for n = 1..N
/// (rows) and p = 0..order (columns). Entries are exact integers; (N, order)
/// combinations where N^order exceeds 2^53 are rejected rather than silently
/// rounded.
inline Matrix build_design_matrix(int N, int order) {
  if (order < 0) throw DomainError("order must be >= 0");
  if (N < order + 1) throw DomainError("need N >= order + 1 samples to identify the coefficients");
  if (std::pow(static_cast<double>(N), order) > kExactIntegerLimit) {
    throw DomainError("N^order exceeds the exactly representable integer range");
  }
  Matrix X(N, order + 1);
  for (int n = 1; n <= N; ++n) {
    double v = 1.0;
    for (int p = 0; p <= order; ++p) {
      X(n - 1, p) = v;
      v *= n;
    }
  }
  return X;
}

/// Signal samples x[1..N] for the given coefficients.
inline Vector eval_signal(const SignalSpec& s, int N) {
  validate_signal(s);
  if (s.beta.size() == 0) throw DomainError("eval_signal needs coefficients");
  if (N < 1) throw DomainError("N must be >= 1");
  Vector x = Vector::Zero(N);
  for (int n = 1; n <= N; ++n) {
    // Horner evaluation; exact powers are not needed here.
    double acc = 0.0;
    for (int p = s.order; p >= 0; --p) acc = acc * n + s.beta[p];
    x[n - 1] = acc;
  }
  return x;
}

/// Axis-aligned box of sensor parameters, used for random networks and for
/// population-averaged closed-form constants. A degenerate axis (lo == hi)
/// is allowed.
struct ParameterBox {
  double rho_lo{0.0}, rho_hi{0.0};
  double sigma2_lo{1.0}, sigma2_hi{1.0};
  double gamma_lo{0.0}, gamma_hi{0.0};
  Tau tau{1};
};

inline const ParameterBox& validate_box(const ParameterBox& b) {
  auto check_range = [](double lo, double hi, const char* name) {
    if (!(lo <= hi)) throw DomainError(std::string(name) + " range must satisfy lo <= hi");
  };
  check_range(b.rho_lo, b.rho_hi, "rho");
  check_range(b.sigma2_lo, b.sigma2_hi, "sigma2");
  check_range(b.gamma_lo, b.gamma_hi, "gamma");
  if (b.rho_hi == 1.0 && b.rho_lo < 1.0) {
    throw MixedRegimeError("parameter box straddles the unit-root boundary rho = 1");
  }
  validate_drift_params({b.sigma2_lo, b.gamma_lo, b.rho_lo, b.tau});
  validate_drift_params({b.sigma2_hi, b.gamma_hi, b.rho_hi, b.tau});
  return b;
}

/// A network of sensors observing the same signal.
struct NetworkSpec {
  std::vector<DriftParams> sensors;
};

inline const NetworkSpec& validate_network(const NetworkSpec& net) {
  if (net.sensors.empty()) throw DomainError("network needs at least one sensor");
  for (const auto& s : net.sensors) validate_drift_params(s);
  return net;
}

/// Sensors with parameters evenly spaced across the box, endpoint inclusive
/// on every axis (index m of M picks the m-th point of each range).
inline NetworkSpec spaced_network(const ParameterBox& box, int M) {
  validate_box(box);
  if (M < 1) throw DomainError("sensor count must be >= 1");
  NetworkSpec net;
  net.sensors.reserve(M);
  auto at = [M](double lo, double hi, int m) {
    return M == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * m / (M - 1);
  };
  for (int m = 0; m < M; ++m) {
    DriftParams p;
    p.sigma2 = at(box.sigma2_lo, box.sigma2_hi, m);
    p.gamma = at(box.gamma_lo, box.gamma_hi, m);
    p.rho = at(box.rho_lo, box.rho_hi, m);
    p.tau = box.tau;
    net.sensors.push_back(validate_drift_params(p));
  }
  return net;
}

}  // namespace driftcrb
