#pragma once

// Closed-form information and bound asymptotics.
//
// Large-N expansions of J = sum_m X' Sigma_m^-1 X and of diag(J^-1) in the
// two regimes:
//
//  * stationary (rho < 1): with E = diag{1, N, ..., N^P} and the Hilbert
//    matrix H[k][l] = 1/(k+l+1),
//      J ~ N E [ xi0 H + (xi1 e e' + xi2 f f') / N ] E,
//    where e is all-ones and f is the first unit vector; xi0 captures the
//    drift-equivalent noise floor sigma2 (1 + gamma/(1-rho)^2), xi1 the
//    universal second-order coefficient, xi2 the calibration-dependent
//    constant of the (0,0) entry.
//
//  * unit root (rho = 1, finite tau): the constant coefficient stays O(1)
//    informative while the rest scales one order lower,
//      J ~ E [[xi2,        xi3 f_P'/N                               ],
//             [xi3 f_P/N,  D (xi4 H_P + (xi5 e e' + xi6 f f')/N) D/N]] E,
//    with D = diag{1..P} and H_P[k][l] = 1/(k+l-1) for k,l >= 1.
//
// Inverting the truncations (a rank-two perturbation of a Hilbert matrix)
// gives per-coefficient bounds with explicit first- and second-order terms
// and a relative-size gauge epsilon_p of the dropped corrections.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "driftcrb/approximation.hpp"
#include "driftcrb/covariance.hpp"
#include "driftcrb/errors.hpp"
#include "driftcrb/fisher.hpp"
#include "driftcrb/model.hpp"
#include "driftcrb/quadrature.hpp"

namespace driftcrb {

/// Largest polynomial order the closed-form expansions support. The exact
/// pipeline has no such limit.
inline constexpr int kMaxClosedFormOrder = 6;

/// First four coefficients of sum_{n=1}^N n^q as a polynomial in N:
/// {1/(q+1), 1/2, q/12, 0} for the powers N^(q+1)..N^(q-2), with entries
/// beyond the polynomial's actual degree zeroed. Reconstruction is exact for
/// q <= 3 and accurate to O(N^(q-3)) afterwards.
inline std::array<double, 4> power_sum_coeffs(int q) {
  if (q < 0) throw DomainError("power sum needs q >= 0");
  std::array<double, 4> b{1.0 / (q + 1.0), 0.0, 0.0, 0.0};
  if (q >= 1) b[1] = 0.5;
  if (q >= 2) b[2] = q / 12.0;
  return b;
}

/// Closed form of sum_{n>=1} n^v y^n for v in {0,1,2,3}, |y| < 1.
inline double polylog_closed(int v, double y) {
  if (!(std::abs(y) < 1.0)) throw DomainError("polylog series needs |y| < 1");
  const double u = 1.0 - y;
  switch (v) {
    case 0: return y / u;
    case 1: return y / (u * u);
    case 2: return y * (1.0 + y) / (u * u * u);
    case 3: return y * (1.0 + y * (4.0 + y)) / (u * u * u * u);
    default: throw DomainError("polylog closed form implemented for v <= 3");
  }
}

namespace detail {

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

}  // namespace detail

/// Polynomial-in-N coefficients of the quadratic form [X' M X]_{k,l}:
///   [X' M X]_{k,l} = sum_i a[i] N^(k+l+1-i) + alpha + O(N^(k+l+1) y^N),
/// with a[i] available for i <= min(3, k+l) and the constant term alpha
/// tabulated for (k,l) in {(0,0), (0,1), (1,0), (1,1)}.
struct XtmxConstants {
  std::vector<double> a;
  std::optional<double> alpha;
};

inline XtmxConstants xtmx_constants(int k, int l, const DriftConstants& c) {
  if (k < 0 || l < 0) throw DomainError("coefficient indices must be >= 0");
  if (k > kMaxClosedFormOrder || l > kMaxClosedFormOrder) {
    throw DomainError("closed-form constants support orders up to 6");
  }
  const int q = k + l;
  const double y = c.y;
  const double u = 1.0 - y;
  const double Y0 = polylog_closed(0, y);
  const double Y1 = polylog_closed(1, y);
  const double Y2 = polylog_closed(2, y);
  const double Y3 = polylog_closed(3, y);
  const double c2 = detail::binom(k, 2) + detail::binom(l, 2);

  // Toeplitz-core contributions per power of N.
  std::array<double, 4> a_core{};
  a_core[0] = 2.0 * Y0 / (q + 1.0);
  a_core[1] = Y0 - Y1;
  if (q >= 2) a_core[2] = q / 6.0 * Y0 - q / 2.0 * Y1 + c2 / (q - 1.0) * Y2;
  if (q >= 3) {
    a_core[3] = -detail::binom(q, 2) / 6.0 * Y1 + c2 / 2.0 * Y2 - (c2 - k * l / 2.0) / 3.0 * Y3;
  }
  // Bottom-corner contributions, indexed one power lower.
  std::array<double, 4> a_tail{};
  a_tail[0] = 1.0 / (u * u);
  a_tail[1] = -q * y / (u * u * u);
  a_tail[2] = y * ((1.0 + y) * c2 + k * l * y) / (u * u * u * u);

  XtmxConstants out;
  const auto b = power_sum_coeffs(q);
  const int top = std::min(3, q);
  out.a.resize(top + 1);
  for (int i = 0; i <= top; ++i) {
    out.a[i] = b[i] + a_core[i] + (i >= 1 ? c.kappa * a_tail[i - 1] : 0.0);
  }

  // Constant terms: Toeplitz core, head corner (weight eta_tau) and the
  // closed tail-corner coefficient of order q.
  if (q == 0) {
    out.alpha = -2.0 * y / (u * u) + c.eta_tau / (u * u) + c.kappa * a_tail[0];
  } else if (q == 1 && k * l == 0) {
    out.alpha = -y / (u * u) + c.eta_tau / (u * u * u) + c.kappa * a_tail[1];
  } else if (k == 1 && l == 1) {
    out.alpha = 2.0 * y * y / (u * u * u * u) + c.eta_tau / (u * u * u * u) + c.kappa * a_tail[2];
  }
  return out;
}

/// Constant term of [X' M X]_{k,l}; throws when outside the tabulated pairs.
inline double xtmx_alpha(int k, int l, const DriftConstants& c) {
  const auto x = xtmx_constants(k, l, c);
  if (!x.alpha) throw DomainError("constant term tabulated only for k+l <= 2 with k,l <= 1");
  return *x.alpha;
}

enum class Regime { stationary, random_walk };

/// Scalar information coefficients of one sensor or, summed, of a network.
/// Unused entries of the other regime are zero.
struct XiConstants {
  Regime regime{Regime::stationary};
  double xi0{0.0};  ///< stationary: leading Hilbert weight
  double xi1{0.0};  ///< stationary: universal N^(k+l) coefficient
  double xi2{0.0};  ///< constant-coefficient information (both regimes)
  double xi3{0.0};  ///< unit root: constant/slope cross term
  double xi4{0.0};  ///< unit root: leading weight of the p >= 1 block
  double xi5{0.0};  ///< unit root: universal second-order coefficient
  double xi6{0.0};  ///< unit root: calibration-dependent (1,1) constant
  int sensor_count{1};
};

/// Coefficients for one sensor. gamma = 0 reduces to plain white noise
/// (any rho); otherwise rho must be positive, and rho = 1 requires finite tau.
inline XiConstants xi_constants(const DriftParams& p) {
  validate_drift_params(p);
  XiConstants xi;
  if (p.gamma == 0.0) {
    xi.regime = Regime::stationary;
    xi.xi0 = 1.0 / p.sigma2;
    xi.xi1 = 0.5 / p.sigma2;
    xi.xi2 = -xi.xi1;
    return xi;
  }
  const DriftConstants c = drift_constants(p.gamma, p.rho, p.tau);
  const double y = c.y;
  if (p.rho < 1.0) {
    xi.regime = Regime::stationary;
    xi.xi0 = (1.0 - c.nu * (1.0 + y) / (1.0 - y)) / p.sigma2;
    const double a1 = xtmx_constants(0, 1, c).a[1];
    xi.xi1 = (0.5 - c.nu * a1) / p.sigma2;
    xi.xi2 = -xi.xi1 - c.nu * xtmx_alpha(0, 0, c) / p.sigma2;
    return xi;
  }
  xi.regime = Regime::random_walk;
  const double tau = static_cast<double>(p.tau.periods);
  const double gt = c.gamma_tilde_rw;  // sqrt(1 + 4/gamma)
  xi.xi2 = 1.0 / (p.sigma2 * (2.0 / (gt + 1.0)) * (1.0 + 2.0 * tau / (gt - 1.0)));
  xi.xi3 = -c.nu * xtmx_alpha(1, 0, c) / p.sigma2;
  xi.xi4 = 1.0 / (p.sigma2 * p.gamma);
  const double u = 1.0 - y;
  xi.xi5 = -y * y / (u * u * u) / p.sigma2;
  xi.xi6 = -xi.xi5 - c.nu * xtmx_alpha(1, 1, c) / p.sigma2;
  return xi;
}

namespace detail {

inline void add_in_place(XiConstants& acc, const XiConstants& x) {
  acc.xi0 += x.xi0;
  acc.xi1 += x.xi1;
  acc.xi2 += x.xi2;
  acc.xi3 += x.xi3;
  acc.xi4 += x.xi4;
  acc.xi5 += x.xi5;
  acc.xi6 += x.xi6;
}

}  // namespace detail

/// Network coefficients: information adds, so each xi is the plain sum over
/// sensors. All sensors must share a regime (a gamma = 0 sensor counts as
/// stationary).
inline XiConstants effective_xi(const std::vector<DriftParams>& sensors) {
  if (sensors.empty()) throw DomainError("need at least one sensor");
  XiConstants acc = xi_constants(sensors.front());
  acc.sensor_count = static_cast<int>(sensors.size());
  for (std::size_t m = 1; m < sensors.size(); ++m) {
    const XiConstants x = xi_constants(sensors[m]);
    if (x.regime != acc.regime) {
      throw MixedRegimeError("sensors straddle the stationary / unit-root regimes");
    }
    detail::add_in_place(acc, x);
  }
  return acc;
}

/// Population-averaged coefficients of M sensors drawn uniformly from the
/// box: each xi is M times its box average, evaluated with a fixed
/// Gauss-Legendre rule (16 nodes per non-degenerate axis).
inline XiConstants effective_xi_integral(const ParameterBox& box, int M) {
  validate_box(box);
  if (M < 1) throw DomainError("sensor count must be >= 1");

  auto axis_nodes = [](double lo, double hi) {
    std::vector<std::pair<double, double>> nodes;  // (value, weight), weights sum to 1
    if (lo == hi) {
      nodes.emplace_back(lo, 1.0);
      return nodes;
    }
    const auto& r = detail::gauss_legendre16();
    for (int i = 0; i < detail::kGaussLegendreOrder; ++i) {
      nodes.emplace_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * r.node[i], 0.5 * r.weight[i]);
    }
    return nodes;
  };

  const auto rho_nodes = axis_nodes(box.rho_lo, box.rho_hi);
  const auto sig_nodes = axis_nodes(box.sigma2_lo, box.sigma2_hi);
  const auto gam_nodes = axis_nodes(box.gamma_lo, box.gamma_hi);

  XiConstants acc;
  bool first = true;
  for (const auto& [rho, wr] : rho_nodes) {
    for (const auto& [sig2, ws] : sig_nodes) {
      for (const auto& [gam, wg] : gam_nodes) {
        XiConstants x = xi_constants({sig2, gam, rho, box.tau});
        const double w = wr * ws * wg;
        x.xi0 *= w; x.xi1 *= w; x.xi2 *= w; x.xi3 *= w;
        x.xi4 *= w; x.xi5 *= w; x.xi6 *= w;
        if (first) {
          acc.regime = x.regime;
          first = false;
        } else if (x.regime != acc.regime) {
          throw MixedRegimeError("box average crosses the stationary / unit-root boundary");
        }
        detail::add_in_place(acc, x);
      }
    }
  }
  acc.xi0 *= M; acc.xi1 *= M; acc.xi2 *= M; acc.xi3 *= M;
  acc.xi4 *= M; acc.xi5 *= M; acc.xi6 *= M;
  acc.sensor_count = M;
  return acc;
}

/// Squared inverse-Hilbert scale [(P+p+1) C(P+p,p) C(P,p)]^2.
inline double hilbert_K(int P, int p) {
  const double v = (P + p + 1.0) * detail::binom(P + p, p) * detail::binom(P, p);
  return v * v;
}

/// Constant-perturbation leverage ((P+1)/(p+1))^2.
inline double hilbert_L(int P, int p) {
  const double v = (P + 1.0) / (p + 1.0);
  return v * v;
}

/// Diagonal of [c0 H + (c1 e e' + c2 f f')/N]^-1 to second order:
///   (K_{P,p}/c0) [ 1/(2p+1) - (c1 + c2 L_{P,p})/(N c0) ].
inline Vector perturbed_hilbert_inverse_diag(double c0, double c1, double c2, int N, int P) {
  if (c0 == 0.0) throw DomainError("leading Hilbert weight must be nonzero");
  if (P < 0 || N < 1) throw DomainError("need P >= 0 and N >= 1");
  Vector v(P + 1);
  for (int p = 0; p <= P; ++p) {
    v[p] = hilbert_K(P, p) / c0 *
           (1.0 / (2.0 * p + 1.0) - (c1 + c2 * hilbert_L(P, p)) / (N * c0));
  }
  return v;
}

/// Truncated information matrix and its structural pieces.
struct ApproxFimParts {
  Matrix E;        ///< diag{1, N, ..., N^P}
  Matrix H;        ///< Hilbert block of the leading term
  Vector e, f;     ///< all-ones and first-unit vectors of the block
  Matrix D;        ///< diag{1..P}; unit-root regime only (else empty)
  Matrix Q0, Q1, Q2;  ///< J = N E (Q0 + Q1/N) E   (stationary)
                      ///< J =   E (Q0 + Q1/N + Q2/N^2) E   (unit root)
};

struct ApproxFim {
  Matrix J;
  Regime regime{Regime::stationary};
  ApproxFimParts parts;
};

/// Assembles the truncated J for the given coefficients.
inline ApproxFim approx_fim(const XiConstants& xi, int N, int P) {
  if (P < 0 || N < 1) throw DomainError("need P >= 0 and N >= 1");
  if (P > kMaxClosedFormOrder) throw DomainError("closed-form expansions support P up to 6");
  ApproxFim out;
  out.regime = xi.regime;
  const int n = P + 1;
  ApproxFimParts& parts = out.parts;
  parts.E = Matrix::Zero(n, n);
  for (int p = 0; p <= P; ++p) parts.E(p, p) = std::pow(static_cast<double>(N), p);
  parts.Q0 = Matrix::Zero(n, n);
  parts.Q1 = Matrix::Zero(n, n);
  parts.Q2 = Matrix::Zero(n, n);

  if (xi.regime == Regime::stationary) {
    parts.H = Matrix::Zero(n, n);
    for (int k = 0; k <= P; ++k) {
      for (int l = 0; l <= P; ++l) parts.H(k, l) = 1.0 / (k + l + 1.0);
    }
    parts.e = Vector::Ones(n);
    parts.f = Vector::Zero(n);
    parts.f[0] = 1.0;
    parts.Q0 = xi.xi0 * parts.H;
    parts.Q1 = xi.xi1 * parts.e * parts.e.transpose() +
               xi.xi2 * parts.f * parts.f.transpose();
    out.J = static_cast<double>(N) * parts.E * (parts.Q0 + parts.Q1 / N) * parts.E;
    return out;
  }

  // Unit root: constant coefficient is O(1) informative, the slope block is
  // one order lower in N.
  parts.H = Matrix::Zero(std::max(P, 0), std::max(P, 0));
  for (int k = 1; k <= P; ++k) {
    for (int l = 1; l <= P; ++l) parts.H(k - 1, l - 1) = 1.0 / (k + l - 1.0);
  }
  parts.e = Vector::Ones(std::max(P, 0));
  parts.f = Vector::Zero(std::max(P, 0));
  if (P >= 1) parts.f[0] = 1.0;
  parts.D = Matrix::Zero(std::max(P, 0), std::max(P, 0));
  for (int k = 1; k <= P; ++k) parts.D(k - 1, k - 1) = k;

  parts.Q0(0, 0) = xi.xi2;
  if (P >= 1) {
    parts.Q1(0, 1) = parts.Q1(1, 0) = xi.xi3;
    for (int k = 1; k <= P; ++k) {
      for (int l = 1; l <= P; ++l) {
        parts.Q1(k, l) = k * l * xi.xi4 / (k + l - 1.0);
        parts.Q2(k, l) = k * l * xi.xi5;
      }
    }
    parts.Q2(1, 1) = xi.xi5 + xi.xi6;
  }
  out.J = parts.E * (parts.Q0 + parts.Q1 / N + parts.Q2 / (static_cast<double>(N) * N)) * parts.E;
  return out;
}

enum class CrbOrder { first, second };

/// Closed-form bound report.
struct CrbReport {
  Vector diag;
  CrbOrder order{CrbOrder::second};
  Regime regime{Regime::stationary};
  Vector epsilon;   ///< relative size of the dropped correction per p
  Vector K, L;      ///< scale constants as used per p (NaN where not defined)
  bool negative_variance{false};
  std::optional<double> mre_vs_exact;
};

/// Relative magnitude of the second-order correction per coefficient; the
/// truncation is trustworthy where this is small.
inline Vector approximation_region(const XiConstants& xi, int N, int P) {
  if (P < 0 || N < 1) throw DomainError("need P >= 0 and N >= 1");
  if (P > kMaxClosedFormOrder) throw DomainError("closed-form expansions support P up to 6");
  Vector eps(P + 1);
  if (xi.regime == Regime::stationary) {
    for (int p = 0; p <= P; ++p) {
      eps[p] = std::abs((2.0 * p + 1.0) * (xi.xi1 + xi.xi2 * hilbert_L(P, p)) / (xi.xi0 * N));
    }
    return eps;
  }
  eps[0] = (P == 0) ? 0.0
                    : static_cast<double>(P) * P * xi.xi3 * xi.xi3 / (N * xi.xi2 * xi.xi4);
  for (int p = 1; p <= P; ++p) {
    const double pp = static_cast<double>(p);
    const double c2 = xi.xi6 - xi.xi3 * xi.xi3 / xi.xi2;
    const double tilde = (xi.xi5 + c2 * P * P / (pp * pp)) / xi.xi4;
    eps[p] = std::abs((2.0 * p - 1.0) * tilde / N);
  }
  return eps;
}

/// Closed-form bound per coefficient at the requested order.
inline CrbReport closed_form_crb(const XiConstants& xi, int N, int P, CrbOrder order) {
  if (P < 0 || N < 1) throw DomainError("need P >= 0 and N >= 1");
  if (P > kMaxClosedFormOrder) throw DomainError("closed-form expansions support P up to 6");
  CrbReport rep;
  rep.order = order;
  rep.regime = xi.regime;
  rep.diag.resize(P + 1);
  rep.K.resize(P + 1);
  rep.L.resize(P + 1);
  rep.epsilon = approximation_region(xi, N, P);

  if (xi.regime == Regime::stationary) {
    for (int p = 0; p <= P; ++p) {
      rep.K[p] = hilbert_K(P, p);
      rep.L[p] = hilbert_L(P, p);
    }
    if (P == 0) {
      rep.diag[0] = (order == CrbOrder::first)
                        ? 1.0 / (xi.xi0 * N)
                        : 1.0 / (xi.xi0 * N + xi.xi1 + xi.xi2);
    } else {
      for (int p = 0; p <= P; ++p) {
        const double lead = rep.K[p] / (std::pow(static_cast<double>(N), 2 * p + 1) * xi.xi0);
        double bracket = 1.0 / (2.0 * p + 1.0);
        if (order == CrbOrder::second) {
          bracket -= (xi.xi1 + xi.xi2 * rep.L[p]) / (N * xi.xi0);
        }
        rep.diag[p] = lead * bracket;
      }
    }
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.K[0] = rep.L[0] = nan;
    rep.diag[0] = 1.0 / xi.xi2;
    if (order == CrbOrder::second && P >= 1) {
      rep.diag[0] *= 1.0 + static_cast<double>(P) * P * xi.xi3 * xi.xi3 / (N * xi.xi2 * xi.xi4);
    }
    for (int p = 1; p <= P; ++p) {
      const double pp = static_cast<double>(p);
      rep.K[p] = hilbert_K(P - 1, p - 1);
      rep.L[p] = static_cast<double>(P) * P / (pp * pp);
      const double lead = rep.K[p] / (std::pow(static_cast<double>(N), 2 * p - 1) * pp * pp * xi.xi4);
      double bracket = 1.0 / (2.0 * p - 1.0);
      if (order == CrbOrder::second) {
        const double c2 = xi.xi6 - xi.xi3 * xi.xi3 / xi.xi2;
        bracket -= (xi.xi5 + c2 * rep.L[p]) / (xi.xi4 * N);
      }
      rep.diag[p] = lead * bracket;
    }
  }
  for (int p = 0; p <= P; ++p) {
    if (!(rep.diag[p] > 0.0)) rep.negative_variance = true;
  }
  return rep;
}

inline CrbReport closed_form_crb(const DriftParams& p, int N, int P, CrbOrder order) {
  return closed_form_crb(xi_constants(p), N, P, order);
}

/// Worst-case relative deviation from a reference bound, max over p.
inline double max_relative_error(const Vector& exact, const Vector& approx) {
  if (exact.size() != approx.size() || exact.size() == 0) {
    throw DomainError("bound vectors must have equal nonzero length");
  }
  double m = 0.0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    if (exact[i] == 0.0) throw DomainError("reference bound entry is zero");
    m = std::max(m, std::abs(exact[i] - approx[i]) / std::abs(exact[i]));
  }
  return m;
}

/// Bound from the truncated information matrix, inverted numerically.
inline Vector approx_crb_via_fim(const XiConstants& xi, int N, int P) {
  FimExact fim;
  fim.J = approx_fim(xi, N, P).J;
  fim.N = N;
  fim.order = P;
  fim.sensor_count = xi.sensor_count;
  return exact_crb(fim).diag;
}

enum class ApproxVariant { fim, crb };

struct NEpsilonResult {
  double n{std::numeric_limits<double>::quiet_NaN()};
  std::string reason;  ///< empty on success
};

/// Smallest N at which the approximation's worst-case relative error drops
/// below eps: doubling from N = P + 2 to bracket the crossing, then integer
/// bisection inside the bracket.
inline NEpsilonResult n_epsilon(const NetworkSpec& net, int P, double eps,
                                ApproxVariant variant, double n_cap = 1e6) {
  validate_network(net);
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  const XiConstants xi = effective_xi(net.sensors);
  auto mre_at = [&](int N) {
    const Vector exact = exact_crb_diag(net, N, P);
    // At small N the dropped terms can dominate and leave the truncated
    // information matrix numerically singular; that N simply has not crossed.
    try {
      const Vector approx = (variant == ApproxVariant::crb)
                                ? closed_form_crb(xi, N, P, CrbOrder::second).diag
                                : approx_crb_via_fim(xi, N, P);
      return max_relative_error(exact, approx);
    } catch (const SingularFimError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  int n = P + 2;
  if (mre_at(n) < eps) return {static_cast<double>(n), ""};
  int lo = n;  // fails
  while (true) {
    if (2.0 * n > n_cap) return {std::numeric_limits<double>::quiet_NaN(), "no_crossing_below_cap"};
    lo = n;
    n *= 2;
    if (mre_at(n) < eps) break;
  }
  int hi = n;  // passes
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (mre_at(mid) < eps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {static_cast<double>(hi), ""};
}

}  // namespace driftcrb
