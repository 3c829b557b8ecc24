#pragma once

// Fixed-order Gauss-Legendre rule used for parameter-box averages.

#include <array>
#include <cmath>
#include <numbers>
#include <utility>

namespace driftcrb::detail {

inline constexpr int kGaussLegendreOrder = 16;

struct GaussLegendreRule {
  std::array<double, kGaussLegendreOrder> node;    // on (-1, 1)
  std::array<double, kGaussLegendreOrder> weight;  // sums to 2
};

/// Nodes and weights by Newton iteration on the Legendre polynomial.
inline const GaussLegendreRule& gauss_legendre16() {
  static const GaussLegendreRule rule = [] {
    GaussLegendreRule r{};
    constexpr int n = kGaussLegendreOrder;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        // Recurrence for P_n(x) and its derivative.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double step = p1 / dp;
        x -= step;
        if (std::abs(step) < 1e-15) break;
      }
      r.node[i] = -x;
      r.node[n - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      r.weight[i] = w;
      r.weight[n - 1 - i] = w;
    }
    return r;
  }();
  return rule;
}

/// Average of f over [lo, hi]; a degenerate interval is a point evaluation.
template <typename F>
double interval_average(double lo, double hi, F&& f) {
  if (lo == hi) return f(lo);
  const auto& r = gauss_legendre16();
  double acc = 0.0;
  for (int i = 0; i < kGaussLegendreOrder; ++i) {
    const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * r.node[i];
    acc += r.weight[i] * f(x);
  }
  return 0.5 * acc;  // weights sum to 2
}

}  // namespace driftcrb::detail
