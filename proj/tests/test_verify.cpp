#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/equilibrium.hpp"
#include "fluctlab/verify.hpp"
#include "oracles.hpp"

using namespace fluctlab;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("basic estimators") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 1, 4, 3};
  CHECK(mean_of(x).value == 2.5);
  CHECK(mean_of(x).se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(variance_of(x).value == doctest::Approx(5.0 / 3.0));
  CHECK(covariance_of(x, y).value == doctest::Approx(1.0));
  CHECK(product_mean_of(x, y).value == doctest::Approx((2 + 2 + 12 + 12) / 4.0));
  CHECK(std::isnan(mean_of(std::vector<double>{1.0}).se));

  EnsembleStats st({"a", "b"});
  st.add(std::vector<double>{1, 2});
  st.add(std::vector<double>{3, 6});
  CHECK(st.count() == 2);
  CHECK(st.mean("b").value == 4.0);
  CHECK(st.cov(0, 1).value == doctest::Approx(4.0));
  CHECK_THROWS(st.index("c"));
}

TEST_CASE("compare helpers") {
  const Report r = compare_se("q", Estimate{1.0, 0.1}, 1.25);
  CHECK(r.pass == true);
  CHECK(*r.z_score == doctest::Approx(-2.5));
  CHECK(compare_se("q", Estimate{1.0, 0.1}, 1.35).pass == false);
  const Report nose = compare_se("q", Estimate{1.0, NAN}, 1.0);
  CHECK(!nose.se.has_value());
  CHECK(!nose.pass.has_value());
  CHECK(compare_relative("q", Estimate{1.04, NAN}, 1.0, 0.05).pass == true);
  CHECK(compare_relative("q", Estimate{1.06, NAN}, 1.0, 0.05).pass == false);
}

TEST_CASE("scaling fit recovers a synthetic slope") {
  Rng rng(3);
  std::vector<double> xs, ys, se;
  for (int n : {64, 128, 256, 512}) {
    xs.push_back(std::log(double(n)));
    se.push_back(0.05);
    ys.push_back(1.5 * xs.back() - 2.0 + 0.05 * rng.normal());
  }
  const ScalingFit w = fit_scaling(xs, ys, se);
  CHECK(std::abs(w.slope - 1.5) <= 3 * w.slope_se);
  CHECK(w.slope_se == doctest::Approx(0.05 / (std::log(2.0) * std::sqrt(5.0))).epsilon(1e-9));
  const ScalingFit o = fit_scaling(xs, ys);
  CHECK(std::abs(o.slope - 1.5) <= 3 * o.slope_se);

  CHECK_THROWS_AS(fit_scaling(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(fit_scaling(std::vector<double>{1, 2, 3}, std::vector<double>{1, -INFINITY, 2}),
                  std::invalid_argument);
}

TEST_CASE("BG integrand by hand") {
  // xi centered at rho = 1: xi - 1 = {1, -1, 2, 0}; box length 2 to the right
  const std::vector<double> xi{2, 0, 3, 1};
  const std::vector<double> psi{1, 0, 0, 0.5};
  // x = 0: 1 * (-1) - ((-1 + 2) / 2)^2 + tau2 / 2
  // x = 3: 0 * 1 - ((1 - 1) / 2)^2 + tau2 / 2
  const double tau2 = 0.7;
  const double want = 1.0 * (-1.0 - 0.25 + 0.35) + 0.5 * (0.0 - 0.0 + 0.35);
  CHECK(bg_integrand(xi, psi, 1.0, tau2, 2) == doctest::Approx(want));
}

TEST_CASE("static BG moment equals the brute-force quadratic-form variance") {
  for (double lambda : {0.0, 1.5}) {
    ModelParams p;
    p.n = 14;
    p.lambda = lambda;
    p.beta = 1.3;
    const double eps = 0.25;
    const int n = p.n, L = int(std::floor(eps * n));
    const TestFunction psi({{1, 1.0}, {0, 0.2}});
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int x = 0; x < n; ++x) {
      const double w = psi(double(x) / n);
      M(x, (x + 1) % n) += 0.5 * w;
      M((x + 1) % n, x) += 0.5 * w;
      for (int i = 1; i <= L; ++i)
        for (int j = 1; j <= L; ++j) M((x + i) % n, (x + j) % n) -= w / double(L * L);
    }
    const double k = lambda + 1, beta = p.beta;
    const double v = k / (beta * beta);
    const double m4 = (3 * k * k + 6 * k) / std::pow(beta, 4);
    CHECK(bg_static_moment(p, psi, eps) ==
          doctest::Approx(oracle::quadratic_form_variance(M, v, m4)).epsilon(1e-12));
  }
}

TEST_CASE("BG rhs shape") {
  ModelParams p;
  p.n = 64;
  const TestFunction psi = TestFunction::mode(1);
  double norm = 0.0;
  for (int x = 0; x < 64; ++x) norm += std::pow(psi(x / 64.0), 2) / 64.0;
  CHECK(bg_rhs_shape(p, psi, 0.1, 0.2) == doctest::Approx(0.2 * norm * (0.1 + 0.2 / (0.01 * 64))));
}

TEST_CASE("martingale residual vanishes for the frozen process") {
  ModelParams p;
  p.n = 16;
  p.alpha = 0.0;
  p.gamma = 0.0;
  const Configuration c0 = sample_gibbs(p, 1, 4)[0];
  Rng rng(1);
  const auto traj = evolve(c0, p, IntegratorSpec{1e-3, Scheme::split_strang, 1}, 0.01, uniform_times(0.01, 5), rng);
  for (double r : martingale_residual(traj, p, TestFunction::mode(1), TestFunction::mode(-2))) CHECK(r == 0.0);
}

TEST_CASE("martingale residual of a drift-only path is small") {
  ModelParams p;
  p.n = 32;
  p.gamma = 0.0;
  const Configuration c0 = sample_gibbs(p, 1, 6)[0];
  Rng rng(1);
  const double T = 0.01;
  const auto traj = evolve(c0, p, IntegratorSpec::defaults(p), T, uniform_times(T, 400), rng);
  const auto res = martingale_residual(traj, p, TestFunction::mode(1), TestFunction::mode(1));
  for (double r : res) CHECK(std::abs(r) <= 1e-4);
}

TEST_CASE("QV prediction closed forms") {
  ModelParams p;
  p.n = 256;
  p.kappa = 2.0;
  const Moments m = moments(p);
  const auto h1 = TestFunction::mode(1);
  const double k2 = 4 * kPi * kPi, T = 0.1;
  CHECK(qv_prediction(p, h1, h1, T) ==
        doctest::Approx(2 * T * p.gamma * k2 * (m.tau2 + m.sigma2 + 2 * m.delta)));

  p.kappa = 1.0;
  const double c = cn(p);
  const double cross = oracle::simpson(
      [&](double u) { return (h1(u + c * T) - h1(u)) * h1.gradient()(u); }, 0, 1, 2000) / c;
  CHECK(qv_prediction(p, h1, h1, T) ==
        doctest::Approx(2 * p.gamma * (T * k2 * (m.tau2 + m.sigma2) + 2 * m.delta * cross)).epsilon(1e-9));

  // a < 2 scales by n^{a-2}
  ModelParams q = p;
  q.a = 1.5;
  q.kappa = 0.5;
  const double cq = cn(q);
  const double cross_q = oracle::simpson(
      [&](double u) { return (h1(u + cq * T) - h1(u)) * h1.gradient()(u); }, 0, 1, 2000) / cq;
  CHECK(qv_prediction(q, h1, h1, T) ==
        doctest::Approx(2 * std::pow(256.0, -0.5) * (T * k2 * (m.tau2 + m.sigma2) + 2 * m.delta * cross_q))
            .epsilon(1e-9));
}

TEST_CASE("covariance_vs_ou at zero lag compares to the Lyapunov matrix") {
  ModelParams p;
  p.n = 64;
  p.kappa = 2;
  const Moments m = moments(p);
  Eigen::MatrixXd D(2, 2);
  D << m.tau2, m.delta, m.delta, m.sigma2;
  const OUParams ou{p.gamma * Eigen::MatrixXd::Identity(2, 2), p.gamma * D};
  std::vector<FieldSample> samples;
  for (const auto& c : sample_gibbs(p, 400, 3)) samples.push_back(sample_fields(c, 0.0, std::vector<int>{1}, p));
  const CovarianceReport rep = covariance_vs_ou(samples, samples, ou, std::vector<int>{1});
  REQUIRE(!rep.entries.empty());
  for (const auto& e : rep.entries) CHECK(std::abs(*e.z_score) <= 4.0);
}
