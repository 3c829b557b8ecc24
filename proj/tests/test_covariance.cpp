#include <catch2/catch_amalgamated.hpp>

#include "driftcrb/covariance.hpp"

#include <random>
#include <vector>

using namespace driftcrb;

namespace {

const std::vector<double> kRhoGrid{0.0, 0.3, 0.6, 0.9, 0.99};
const std::vector<double> kGammaGrid{0.0, 0.01, 1.0, 10.0};
const std::vector<Tau> kTauGrid{Tau{1}, Tau{2}, Tau{5}, Tau::infinite()};
const std::vector<int> kNGrid{2, 5, 20, 50};

}  // namespace

TEST_CASE("variance ladder follows the power-sum definition") {
  const Vector s1 = s_ladder({1.0, 0.1, 0.5, Tau{1}}, 2);
  CHECK(s1[0] == Catch::Approx(1.0));
  CHECK(s1[1] == Catch::Approx(1.25));

  const Vector s2 = s_ladder({1.0, 0.1, 0.5, Tau{2}}, 3);
  CHECK(s2[0] == Catch::Approx(1.25));
  CHECK(s2[1] == Catch::Approx(1.3125));
  CHECK(s2[2] == Catch::Approx(1.328125));

  // Unit root with finite calibration age: the ladder is the integers n+tau-1.
  const Vector srw = s_ladder({1.0, 0.1, 1.0, Tau{2}}, 4);
  CHECK(srw[0] == 2.0);
  CHECK(srw[1] == 3.0);
  CHECK(srw[2] == 4.0);
  CHECK(srw[3] == 5.0);

  // Stationary: every rung equals 1/(1-rho^2).
  const Vector sinf = s_ladder({1.0, 0.1, 0.5, Tau::infinite()}, 3);
  for (int i = 0; i < 3; ++i) CHECK(sinf[i] == Catch::Approx(4.0 / 3.0));

  CHECK_THROWS_AS(s_ladder({1.0, 0.1, 1.0, Tau::infinite()}, 3), Error);
}

TEST_CASE("ladder is strictly increasing for autocorrelated calibrated drift") {
  for (double rho : {0.3, 0.6, 0.9, 0.99, 1.0}) {
    for (Tau tau : {Tau{1}, Tau{2}, Tau{5}}) {
      const Vector s = s_ladder({1.0, 1.0, rho, tau}, 20);
      for (int i = 1; i < 20; ++i) {
        // The mathematical increment is rho^(2(i+tau-1)); once it drops
        // below the ulp of the limit, equal doubles are the honest answer.
        const double inc =
            std::pow(rho, 2.0 * (i + static_cast<double>(tau.periods) - 1.0));
        if (inc > 1e-13) {
          CHECK(s[i] > s[i - 1]);
        } else {
          CHECK(s[i] >= s[i - 1]);
        }
      }
    }
  }
  const Vector s = s_ladder({1.0, 1.0, 0.9, Tau::infinite()}, 20);
  for (int i = 1; i < 20; ++i) CHECK(s[i] == s[i - 1]);
}

TEST_CASE("drift correlation matches hand values") {
  const Matrix R1 = drift_covariance({1.0, 0.1, 0.5, Tau{1}}, 2);
  CHECK(R1(0, 0) == Catch::Approx(1.0));
  CHECK(R1(0, 1) == Catch::Approx(0.5));
  CHECK(R1(1, 0) == Catch::Approx(0.5));
  CHECK(R1(1, 1) == Catch::Approx(1.25));

  const Matrix Rinf = drift_covariance({1.0, 0.1, 0.5, Tau::infinite()}, 2);
  CHECK(Rinf(0, 0) == Catch::Approx(4.0 / 3.0));
  CHECK(Rinf(0, 1) == Catch::Approx(2.0 / 3.0));
  CHECK(Rinf(1, 1) == Catch::Approx(4.0 / 3.0));

  const Matrix R0 = drift_covariance({1.0, 0.1, 0.0, Tau{1}}, 3);
  CHECK((R0 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stationary correlation is Toeplitz") {
  const int N = 8;
  const Matrix R = drift_covariance({1.0, 0.5, 0.8, Tau::infinite()}, N);
  for (int i = 1; i < N; ++i) {
    for (int j = 1; j < N; ++j) {
      CHECK(R(i, j) == Catch::Approx(R(i - 1, j - 1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("closed-form precision matches hand values") {
  const Matrix P1 = drift_precision_closed({1.0, 0.1, 0.5, Tau{1}}, 2);
  CHECK(P1(0, 0) == Catch::Approx(1.25));
  CHECK(P1(0, 1) == Catch::Approx(-0.5));
  CHECK(P1(1, 0) == Catch::Approx(-0.5));
  CHECK(P1(1, 1) == Catch::Approx(1.0));

  const Matrix Pinf = drift_precision_closed({1.0, 0.1, 0.5, Tau::infinite()}, 3);
  CHECK(Pinf(0, 0) == Catch::Approx(1.0));
  CHECK(Pinf(0, 1) == Catch::Approx(-0.5));
  CHECK(Pinf(0, 2) == 0.0);
  CHECK(Pinf(1, 1) == Catch::Approx(1.25));
  CHECK(Pinf(1, 2) == Catch::Approx(-0.5));
  CHECK(Pinf(2, 2) == Catch::Approx(1.0));

  const Matrix P0 = drift_precision_closed({1.0, 0.1, 0.0, Tau{1}}, 3);
  CHECK((P0 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(drift_precision_closed({1.0, 0.1, 0.5, Tau{1}}, 1), DomainError);
}

TEST_CASE("closed-form precision inverts the correlation on the whole grid") {
  for (double rho : kRhoGrid) {
    for (Tau tau : kTauGrid) {
      for (int N : kNGrid) {
        const DriftParams p{1.0, 1.0, rho, tau};
        const Matrix R = drift_covariance(p, N);
        const Matrix Pc = drift_precision_closed(p, N);
        const double err = (R * Pc - Matrix::Identity(N, N)).cwiseAbs().maxCoeff();
        INFO("rho=" << rho << " tau=" << tau.periods << " N=" << N);
        CHECK(err <= 1e-8);
      }
    }
  }
  // Unit root with finite calibration age is part of the contract too.
  for (Tau tau : {Tau{1}, Tau{2}, Tau{5}}) {
    for (int N : kNGrid) {
      const DriftParams p{1.0, 1.0, 1.0, tau};
      const Matrix R = drift_covariance(p, N);
      const Matrix Pc = drift_precision_closed(p, N);
      CHECK((R * Pc - Matrix::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("total covariance matches hand values") {
  const CovarianceSet drift_free = total_covariance({2.0, 0.0, 0.7, Tau{1}}, 2);
  CHECK((drift_free.Sigma - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  const CovarianceSet cs = total_covariance({1.0, 1.0, 0.5, Tau{1}}, 2);
  CHECK(cs.Sigma(0, 0) == Catch::Approx(2.0));
  CHECK(cs.Sigma(0, 1) == Catch::Approx(0.5));
  CHECK(cs.Sigma(1, 0) == Catch::Approx(0.5));
  CHECK(cs.Sigma(1, 1) == Catch::Approx(2.25));
  CHECK(cs.N == 2);
  CHECK(cs.params.gamma == 1.0);

  const CovarianceSet white = total_covariance({1.0, 1.0, 0.0, Tau{1}}, 2);
  CHECK((white.Sigma - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("total covariance is symmetric positive definite on the grid") {
  for (double rho : kRhoGrid) {
    for (double gamma : kGammaGrid) {
      for (Tau tau : kTauGrid) {
        for (int N : kNGrid) {
          const CovarianceSet cs = total_covariance({1.0, gamma, rho, tau}, N);
          CHECK((cs.Sigma - cs.Sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
          Eigen::LLT<Matrix> llt(cs.Sigma);
          CHECK(llt.info() == Eigen::Success);
        }
      }
    }
  }
}

TEST_CASE("fast covariance solve agrees with the dense factorization") {
  std::mt19937_64 rng(777);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double rho : {0.0, 0.5, 0.9, 1.0}) {
    for (double gamma : {0.0, 0.4, 3.0}) {
      for (Tau tau : {Tau{1}, Tau{3}}) {
        const int N = 24;
        const DriftParams p{1.7, gamma, rho, tau};
        Matrix B(N, 3);
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < 3; ++j) B(i, j) = gauss(rng);
        const Matrix fast = solve_total_covariance(p, N, B);
        const Matrix dense = total_covariance(p, N).Sigma.llt().solve(B);
        CHECK((fast - dense).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + dense.cwiseAbs().maxCoeff()));
      }
    }
  }
  // Stationary route as well.
  const int N = 24;
  const DriftParams p{1.0, 2.0, 0.85, Tau::infinite()};
  Matrix B(N, 2);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < 2; ++j) B(i, j) = gauss(rng);
  const Matrix fast = solve_total_covariance(p, N, B);
  const Matrix dense = total_covariance(p, N).Sigma.llt().solve(B);
  CHECK((fast - dense).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("drift-free covariance solve short-circuits to scaling") {
  const int N = 6;
  Matrix B = Matrix::Random(N, 2);
  const Matrix got = solve_total_covariance({4.0, 0.0, 0.9, Tau{1}}, N, B);
  CHECK((got - B / 4.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(solve_total_covariance({4.0, 0.0, 0.9, Tau{1}}, N + 1, B), DomainError);
}

TEST_CASE("quantization-adjusted parameters preserve the drift level") {
  const QuantizedParams q0 = quantization_adjusted_params({1.0, 1.0, 0.5, Tau{1}}, 0.0);
  CHECK(q0.sigma2_tilde == Catch::Approx(1.0));
  CHECK(q0.gamma_tilde == Catch::Approx(1.0));

  const QuantizedParams q1 = quantization_adjusted_params({1.0, 1.0, 0.5, Tau{1}}, 1.0);
  CHECK(q1.sigma2_tilde == Catch::Approx(2.0));
  CHECK(q1.gamma_tilde == Catch::Approx(0.5));

  const QuantizedParams q2 = quantization_adjusted_params({100.0, 2.0, 0.9, Tau{1}}, 124.87);
  CHECK(q2.sigma2_tilde == Catch::Approx(224.87));
  CHECK(q2.gamma_tilde == Catch::Approx(0.8894).epsilon(1e-3));
  CHECK(q2.sigma2_tilde * q2.gamma_tilde == Catch::Approx(100.0 * 2.0).epsilon(1e-12));
  CHECK(q2.gamma_tilde <= 2.0);

  CHECK_THROWS_AS(quantization_adjusted_params({1.0, 1.0, 0.5, Tau{1}}, -0.5), DomainError);
}

TEST_CASE("adjusted covariance equals the original plus white distortion") {
  const int N = 10;
  for (double s2q : {0.0, 0.5, 7.0}) {
    const DriftParams p{3.0, 1.2, 0.8, Tau{2}};
    const QuantizedParams q = quantization_adjusted_params(p, s2q);
    const Matrix adjusted = total_covariance(q.adjusted, N).Sigma;
    const Matrix shifted =
        s2q * Matrix::Identity(N, N) + total_covariance(p, N).Sigma;
    CHECK((adjusted - shifted).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
