#include <catch2/catch_amalgamated.hpp>

#include "driftcrb/approximation.hpp"
#include "driftcrb/fisher.hpp"

#include <vector>

using namespace driftcrb;

TEST_CASE("information matrix matches hand values for white noise") {
  const int N = 5;
  const double s2 = 2.0;
  const Matrix X0 = build_design_matrix(N, 0);
  const std::vector<Matrix> sig{s2 * Matrix::Identity(N, N)};
  const FimExact j0 = exact_fim(X0, sig);
  CHECK(j0.J(0, 0) == Catch::Approx(N / s2).epsilon(1e-13));
  CHECK(j0.sensor_count == 1);
  CHECK(j0.order == 0);

  const Matrix X1 = build_design_matrix(3, 1);
  const std::vector<Matrix> sig1{Matrix::Identity(3, 3)};
  const FimExact j1 = exact_fim(X1, sig1);
  CHECK(j1.J(0, 0) == Catch::Approx(3.0));
  CHECK(j1.J(0, 1) == Catch::Approx(6.0));
  CHECK(j1.J(1, 0) == Catch::Approx(6.0));
  CHECK(j1.J(1, 1) == Catch::Approx(14.0));
}

TEST_CASE("information is additive across sensors") {
  const int N = 12;
  const Matrix X = build_design_matrix(N, 1);
  const Matrix Sig = total_covariance({1.5, 0.8, 0.7, Tau{2}}, N).Sigma;
  const FimExact one = exact_fim(X, std::vector<Matrix>{Sig});
  const FimExact two = exact_fim(X, std::vector<Matrix>{Sig, Sig});
  CHECK((two.J - 2.0 * one.J).cwiseAbs().maxCoeff() <= 1e-12 * one.J.cwiseAbs().maxCoeff());
}

TEST_CASE("dense and tridiagonal information routes agree") {
  const int N = 20;
  for (double rho : {0.0, 0.5, 0.9, 1.0}) {
    for (double gamma : {0.0, 0.4, 2.0}) {
      for (Tau tau : {Tau{1}, Tau{3}}) {
        const DriftParams p{2.0, gamma, rho, tau};
        const Matrix X = build_design_matrix(N, 2);
        const Matrix Sig = total_covariance(p, N).Sigma;
        const FimExact dense = exact_fim(X, std::vector<Matrix>{Sig});
        const FimExact fast = exact_fim(X, p);
        const double scale = dense.J.cwiseAbs().maxCoeff();
        INFO("rho=" << rho << " gamma=" << gamma << " tau=" << tau.periods);
        CHECK((dense.J - fast.J).cwiseAbs().maxCoeff() <= 1e-10 * scale);
      }
    }
  }
  const DriftParams stat{1.0, 2.0, 0.85, Tau::infinite()};
  const Matrix X = build_design_matrix(N, 1);
  const Matrix Sig = total_covariance(stat, N).Sigma;
  CHECK((exact_fim(X, std::vector<Matrix>{Sig}).J - exact_fim(X, stat).J)
            .cwiseAbs()
            .maxCoeff() <= 1e-10);
}

TEST_CASE("network information sums sensor contributions") {
  const int N = 15;
  const Matrix X = build_design_matrix(N, 1);
  const DriftParams quiet{1.0, 0.0, 0.0, Tau{1}};
  const DriftParams drifting{2.0, 1.0, 0.9, Tau{1}};

  const FimExact single = network_fim(X, NetworkSpec{{drifting}});
  CHECK((single.J - exact_fim(X, drifting).J).cwiseAbs().maxCoeff() == 0.0);

  const FimExact triple = network_fim(X, NetworkSpec{{drifting, drifting, drifting}});
  CHECK((triple.J - 3.0 * single.J).cwiseAbs().maxCoeff() <=
        1e-12 * single.J.cwiseAbs().maxCoeff());

  const FimExact mixed = network_fim(X, NetworkSpec{{quiet, drifting}});
  const Matrix expect = exact_fim(X, quiet).J + exact_fim(X, drifting).J;
  CHECK((mixed.J - expect).cwiseAbs().maxCoeff() <= 1e-12 * expect.cwiseAbs().maxCoeff());
}

TEST_CASE("bound inversion matches hand values") {
  const Matrix X0 = build_design_matrix(8, 0);
  const FimExact j0 = exact_fim(X0, std::vector<Matrix>{3.0 * Matrix::Identity(8, 8)});
  const CrbExact c0 = exact_crb(j0);
  CHECK(c0.diag[0] == Catch::Approx(3.0 / 8.0).epsilon(1e-13));

  const Matrix X1 = build_design_matrix(3, 1);
  const FimExact j1 = exact_fim(X1, std::vector<Matrix>{Matrix::Identity(3, 3)});
  const CrbExact c1 = exact_crb(j1);
  CHECK(c1.diag[0] == Catch::Approx(14.0 / 6.0).epsilon(1e-12));
  CHECK(c1.diag[1] == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("unit-root constant-signal bound approaches its large-N level") {
  const Vector v = exact_crb_diag(DriftParams{1.0, 0.1, 1.0, Tau{1}}, 400, 0);
  CHECK(v[0] == Catch::Approx(0.37017).epsilon(1e-4));
}

TEST_CASE("bound diagonal dominates the inverse-diagonal floor") {
  const int N = 25;
  const Matrix X = build_design_matrix(N, 2);
  const FimExact fim = exact_fim(X, DriftParams{1.0, 0.7, 0.8, Tau{2}});
  const CrbExact crb = exact_crb(fim);
  for (int p = 0; p <= 2; ++p) {
    CHECK(crb.diag[p] > 0.0);
    CHECK(crb.diag[p] >= 1.0 / fim.J(p, p) - 1e-15);
  }
}

TEST_CASE("adding a sensor never loosens the bound") {
  const int N = 30;
  NetworkSpec net{{DriftParams{1.0, 0.5, 0.9, Tau{1}}}};
  Vector prev = exact_crb_diag(net, N, 1);
  for (int extra = 0; extra < 3; ++extra) {
    net.sensors.push_back({2.0, 0.3, 0.7, Tau{2}});
    const Vector cur = exact_crb_diag(net, N, 1);
    for (int p = 0; p <= 1; ++p) CHECK(cur[p] <= prev[p] * (1.0 + 1e-12));
    prev = cur;
  }
}

TEST_CASE("information route agrees with the structured approximation") {
  const DriftParams p{2.0, 1.0, 0.9, Tau::infinite()};
  const int N = 20;
  const Matrix X = build_design_matrix(N, 1);
  const FimExact exact = exact_fim(X, std::vector<Matrix>{total_covariance(p, N).Sigma});
  const Matrix approx = X.transpose() * approx_precision(p, N) * X / p.sigma2;
  const double err = residual_diagnostics(p, N).max_abs_error;
  for (int k = 0; k <= 1; ++k) {
    for (int l = 0; l <= 1; ++l) {
      const double bound =
          err / p.sigma2 * X.col(k).cwiseAbs().sum() * X.col(l).cwiseAbs().sum();
      CHECK(std::abs(exact.J(k, l) - approx(k, l)) <= bound + 1e-12);
    }
  }
  const double scale = exact.J.cwiseAbs().maxCoeff();
  CHECK((exact.J - approx).cwiseAbs().maxCoeff() <= 1e-6 * scale);
}

TEST_CASE("degenerate information is refused rather than inverted") {
  FimExact flat;
  flat.J = Matrix::Ones(2, 2);  // rank one
  flat.N = 10;
  flat.order = 1;
  CHECK_THROWS_AS(exact_crb(flat), SingularFimError);

  FimExact negative;
  negative.J = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(exact_crb(negative), SingularFimError);

  FimExact near_singular;
  near_singular.J = Matrix::Ones(2, 2);
  near_singular.J(1, 1) += 1e-13;  // equilibrated condition far above the limit
  CHECK_THROWS_AS(exact_crb(near_singular), SingularFimError);

  const Matrix bad = -Matrix::Identity(4, 4);
  CHECK_THROWS_AS(exact_fim(build_design_matrix(4, 1), std::vector<Matrix>{bad}),
                  SingularCovarianceError);
}
