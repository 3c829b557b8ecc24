#pragma once

// Monte-Carlo machinery: reproducible observation synthesis, uniform
// quantization, the (quasi-)maximum-likelihood estimator and empirical
// variance with chi-square confidence intervals.
//
// Randomness is organized as counter-based substreams: every consumer
// derives an independent generator from (master seed, domain tag, index),
// so results are bitwise reproducible for a given seed regardless of how
// trials are scheduled across threads.

#include <Eigen/Dense>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "driftcrb/covariance.hpp"
#include "driftcrb/errors.hpp"
#include "driftcrb/fisher.hpp"
#include "driftcrb/model.hpp"

namespace driftcrb {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Static-partition parallel loop; each index does self-contained work, so
/// scheduling never affects results.
template <typename F>
void parallel_for(std::int64_t n, F&& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<std::int64_t>(std::min<std::uint64_t>(hw, static_cast<std::uint64_t>(n)));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([=, &body] {
      for (std::int64_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Substream domains; keep values stable, they are part of reproducibility.
enum class StreamTag : std::uint64_t {
  trial = 1,
  sensor = 2,
  network_draw = 3,
};

/// Derives a child seed from (master, tag, index).
inline std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  std::uint64_t s = detail::splitmix64(master ^ (static_cast<std::uint64_t>(tag) * 0xA24BAED4963EE407ULL));
  return detail::splitmix64(s ^ (index * 0x9FB21C651E98DF25ULL));
}

using RngStream = std::mt19937_64;

inline RngStream make_stream(std::uint64_t seed) { return RngStream(seed); }

/// One drift realization d[1..N]. Finite tau runs the recursion from the
/// reset point (tau + N - 1 innovations); infinite tau starts from the
/// stationary law. gamma = 0 yields the exact zero path.
inline Vector gen_drift_path(const DriftParams& p, int N, RngStream& rng) {
  validate_drift_params(p);
  if (N < 1) throw DomainError("N must be >= 1");
  Vector d = Vector::Zero(N);
  if (p.gamma == 0.0) return d;
  std::normal_distribution<double> unit;
  const double innovation_sd = std::sqrt(p.gamma * p.sigma2);
  double state = 0.0;
  if (p.tau.is_infinite()) {
    state = unit(rng) * std::sqrt(p.gamma * p.sigma2 / (1.0 - p.rho * p.rho));
    d[0] = state;
    for (int n = 1; n < N; ++n) {
      state = p.rho * state + innovation_sd * unit(rng);
      d[n] = state;
    }
    return d;
  }
  const std::int64_t steps = p.tau.periods + N - 1;
  for (std::int64_t s = 1; s <= steps; ++s) {
    state = p.rho * state + innovation_sd * unit(rng);
    if (s >= p.tau.periods) d[s - p.tau.periods] = state;
  }
  return d;
}

/// One synthesized snapshot of the whole network.
struct ObservationSet {
  Matrix z;      ///< N x M observations
  Matrix drift;  ///< N x M drift component
  Matrix noise;  ///< N x M white component
  std::uint64_t seed{0};
};

/// Signal samples, or zeros when no coefficients are given (estimator
/// variance does not depend on the true coefficients in the linear model).
inline Vector signal_or_zero(const SignalSpec& s, int N) {
  if (s.beta.size() == 0) return Vector::Zero(N);
  return eval_signal(s, N);
}

/// Synthesizes z[n,m] = x[n] + d[n,m] + w[n,m] with per-sensor independent
/// substreams. Identical (network, signal, N, seed) gives identical output.
inline ObservationSet gen_observations(const NetworkSpec& net, const SignalSpec& signal,
                                       int N, std::uint64_t seed) {
  validate_network(net);
  const auto M = static_cast<int>(net.sensors.size());
  const Vector x = signal_or_zero(signal, N);
  ObservationSet obs;
  obs.seed = seed;
  obs.z.resize(N, M);
  obs.drift.resize(N, M);
  obs.noise.resize(N, M);
  for (int m = 0; m < M; ++m) {
    const DriftParams& p = net.sensors[m];
    RngStream rng = make_stream(derive_seed(seed, StreamTag::sensor, static_cast<std::uint64_t>(m)));
    obs.drift.col(m) = gen_drift_path(p, N, rng);
    std::normal_distribution<double> unit;
    const double sd = std::sqrt(p.sigma2);
    for (int n = 0; n < N; ++n) obs.noise(n, m) = sd * unit(rng);
    obs.z.col(m) = x + obs.drift.col(m) + obs.noise.col(m);
  }
  return obs;
}

/// Uniform quantizer with 2^bits levels spanning [lo, hi].
struct QuantizerSpec {
  double lo{0.0};
  double hi{1.0};
  int bits{8};

  std::int64_t levels() const { return std::int64_t{1} << bits; }
  double delta() const { return (hi - lo) / static_cast<double>(levels() - 1); }
  /// Variance of rounding noise uniform on one step: delta^2 / 12.
  double sigma2_q() const { return delta() * delta() / 12.0; }
};

inline const QuantizerSpec& validate_quantizer(const QuantizerSpec& q) {
  if (!(q.lo < q.hi)) throw DomainError("quantizer range must satisfy lo < hi");
  if (q.bits < 1 || q.bits > 30) throw DomainError("quantizer bits must lie in [1, 30]");
  return q;
}

struct QuantizeResult {
  Matrix zq;
  std::int64_t clip_count{0};
  double clip_rate{0.0};
};

/// Clips to [lo, hi], then rounds to the nearest level lo + j delta. Inputs
/// exactly on a level pass through unchanged.
inline QuantizeResult uniform_quantize(const Matrix& z, const QuantizerSpec& q) {
  validate_quantizer(q);
  QuantizeResult out;
  out.zq.resizeLike(z);
  const double delta = q.delta();
  const double top = static_cast<double>(q.levels() - 1);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const double v = z(r, c);
      if (v < q.lo || v > q.hi) ++out.clip_count;
      double j = std::nearbyint((std::clamp(v, q.lo, q.hi) - q.lo) / delta);
      j = std::clamp(j, 0.0, top);
      out.zq(r, c) = q.lo + j * delta;
    }
  }
  const auto total = static_cast<double>(z.size());
  out.clip_rate = (total > 0.0) ? static_cast<double>(out.clip_count) / total : 0.0;
  return out;
}

/// Weighted least-squares estimator beta = J^-1 sum_m X' Sigma_m^-1 z_m,
/// the maximum-likelihood solution under the assumed covariances. Weights
/// are prepared once; each estimate costs O(N M P).
class MlEstimator {
 public:
  /// Assumed covariances from drift parameters (O(N) tridiagonal route).
  MlEstimator(const Matrix& X, const NetworkSpec& assumed) : X_(X) {
    validate_network(assumed);
    const int N = static_cast<int>(X.rows());
    weights_.reserve(assumed.sensors.size());
    for (const auto& p : assumed.sensors) weights_.push_back(solve_total_covariance(p, N, X));
    finish_setup();
  }

  /// Assumed covariances given explicitly (dense route).
  MlEstimator(const Matrix& X, const std::vector<Matrix>& sigmas) : X_(X) {
    if (sigmas.empty()) throw DomainError("need at least one covariance");
    for (const Matrix& S : sigmas) {
      Eigen::LLT<Matrix> llt(S);
      if (llt.info() != Eigen::Success) {
        throw SingularCovarianceError("assumed covariance is not positive definite");
      }
      weights_.push_back(llt.solve(X));
    }
    finish_setup();
  }

  const Matrix& fim() const { return J_; }
  const std::vector<Matrix>& weights() const { return weights_; }

  /// z has one column per sensor.
  Vector estimate(const Matrix& z) const {
    if (z.cols() != static_cast<Eigen::Index>(weights_.size()) || z.rows() != X_.rows()) {
      throw DomainError("observation shape mismatch");
    }
    Vector b = Vector::Zero(X_.cols());
    for (std::size_t m = 0; m < weights_.size(); ++m) {
      b.noalias() += weights_[m].transpose() * z.col(m);
    }
    // beta = S (S J S)^-1 S b with the same equilibration as the inversion guard.
    return scale_.asDiagonal() * solver_.solve((scale_.asDiagonal() * b).eval());
  }

 private:
  void finish_setup() {
    J_ = Matrix::Zero(X_.cols(), X_.cols());
    for (const auto& W : weights_) J_.noalias() += X_.transpose() * W;
    FimExact fim{J_, static_cast<int>(X_.rows()), static_cast<int>(X_.cols()) - 1,
                 static_cast<int>(weights_.size())};
    exact_crb(fim);  // condition guard; throws SingularFimError when ill-posed
    scale_ = J_.diagonal().cwiseSqrt().cwiseInverse();
    solver_.compute(scale_.asDiagonal() * J_ * scale_.asDiagonal());
  }

  Matrix X_;
  std::vector<Matrix> weights_;
  Matrix J_;
  Vector scale_;
  Eigen::LDLT<Matrix> solver_;
};

/// One-shot estimate with true-model weights.
inline Vector ml_estimate(const Matrix& z, const Matrix& X, const NetworkSpec& net) {
  return MlEstimator(X, net).estimate(z);
}

struct MonteCarloConfig {
  NetworkSpec network;
  SignalSpec signal;
  int N{0};
  std::int64_t trials{0};
  std::uint64_t seed{1};
  std::optional<QuantizerSpec> quantizer;
  bool keep_estimates{false};  ///< retain the raw trials x (P+1) estimate matrix
};

struct MonteCarloResult {
  Vector variance;       ///< mean squared deviation from the true coefficients
  Vector variance_about_mean;
  Vector mean;
  Vector bias;
  Vector ci_low, ci_high;  ///< 95% chi-square interval on the true variance
  double clip_rate{0.0};
  std::int64_t trials{0};
  std::uint64_t seed{0};
  std::optional<Matrix> estimates;  ///< per-trial estimates, kept on request
};

/// Runs `trials` independent estimates. With a quantizer the estimator is
/// quasi-maximum-likelihood: weights assume the quantization-adjusted
/// parameters while observations are quantized true-model draws.
inline MonteCarloResult monte_carlo_variance(const MonteCarloConfig& cfg) {
  validate_network(cfg.network);
  if (cfg.trials < 100) throw DomainError("need at least 100 trials for a stable variance");
  if (cfg.N < 1) throw DomainError("N must be >= 1");
  const Matrix X = build_design_matrix(cfg.N, cfg.signal.order);
  const int P = cfg.signal.order;
  const auto M = static_cast<int>(cfg.network.sensors.size());

  NetworkSpec assumed = cfg.network;
  if (cfg.quantizer) {
    validate_quantizer(*cfg.quantizer);
    const double s2q = cfg.quantizer->sigma2_q();
    for (auto& p : assumed.sensors) p = quantization_adjusted_params(p, s2q).adjusted;
  }
  const MlEstimator estimator(X, assumed);

  const Vector beta_true = (cfg.signal.beta.size() != 0)
                               ? Vector(cfg.signal.beta)
                               : Vector(Vector::Zero(P + 1));

  // Per-trial rows, reduced sequentially afterwards: the reduction order is
  // fixed, so thread count cannot change the result.
  Matrix estimates(cfg.trials, P + 1);
  std::vector<std::int64_t> clips(cfg.trials, 0);
  detail::parallel_for(cfg.trials, [&](std::int64_t t) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, StreamTag::trial, static_cast<std::uint64_t>(t));
    ObservationSet obs = gen_observations(cfg.network, cfg.signal, cfg.N, trial_seed);
    if (cfg.quantizer) {
      QuantizeResult qr = uniform_quantize(obs.z, *cfg.quantizer);
      clips[t] = qr.clip_count;
      estimates.row(t) = estimator.estimate(qr.zq).transpose();
    } else {
      estimates.row(t) = estimator.estimate(obs.z).transpose();
    }
  });

  MonteCarloResult res;
  res.trials = cfg.trials;
  res.seed = cfg.seed;
  res.mean = Vector::Zero(P + 1);
  for (std::int64_t t = 0; t < cfg.trials; ++t) res.mean += estimates.row(t).transpose();
  res.mean /= static_cast<double>(cfg.trials);
  res.bias = res.mean - beta_true;

  res.variance = Vector::Zero(P + 1);
  for (std::int64_t t = 0; t < cfg.trials; ++t) {
    const Vector d = estimates.row(t).transpose() - beta_true;
    res.variance += d.cwiseProduct(d);
  }
  res.variance /= static_cast<double>(cfg.trials);
  res.variance_about_mean = res.variance - res.bias.cwiseProduct(res.bias);

  // T v / V ~ chi-square(T) for the deviation-about-truth statistic.
  const boost::math::chi_squared chi2(static_cast<double>(cfg.trials));
  const double q_lo = boost::math::quantile(chi2, 0.025);
  const double q_hi = boost::math::quantile(chi2, 0.975);
  res.ci_low = res.variance * (static_cast<double>(cfg.trials) / q_hi);
  res.ci_high = res.variance * (static_cast<double>(cfg.trials) / q_lo);

  std::int64_t clip_total = 0;
  for (auto c : clips) clip_total += c;
  res.clip_rate = static_cast<double>(clip_total) /
                  (static_cast<double>(cfg.trials) * static_cast<double>(cfg.N) * M);
  if (cfg.keep_estimates) res.estimates = std::move(estimates);
  return res;
}

/// Uniformly random network from a parameter box (one stream per draw).
inline NetworkSpec draw_network(const ParameterBox& box, int M, RngStream& rng) {
  validate_box(box);
  if (M < 1) throw DomainError("sensor count must be >= 1");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  NetworkSpec net;
  net.sensors.reserve(M);
  for (int m = 0; m < M; ++m) {
    DriftParams p;
    p.sigma2 = box.sigma2_lo + (box.sigma2_hi - box.sigma2_lo) * uni(rng);
    p.gamma = box.gamma_lo + (box.gamma_hi - box.gamma_lo) * uni(rng);
    p.rho = box.rho_lo + (box.rho_hi - box.rho_lo) * uni(rng);
    p.tau = box.tau;
    net.sensors.push_back(validate_drift_params(p));
  }
  return net;
}

}  // namespace driftcrb
