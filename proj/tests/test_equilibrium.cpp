#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fluctlab/equilibrium.hpp"
#include "fluctlab/verify.hpp"
#include "oracles.hpp"

using namespace fluctlab;

TEST_CASE("digamma and trigamma oracles reproduce known values") {
  CHECK(oracle::digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-13));
  CHECK(oracle::trigamma(1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-13));
  CHECK(oracle::digamma(0.5) == doctest::Approx(-0.57721566490153286 - 2 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("default parameters give the reference moments") {
  const Moments m = moments(ModelParams{});
  CHECK(m.rho == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.tau2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.v == doctest::Approx(0.5772156649015329).epsilon(1e-13));
  CHECK(m.sigma2 == doctest::Approx(1.6449340668482264).epsilon(1e-13));
  CHECK(m.delta == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(m.e == doctest::Approx(0.5772156649015329).epsilon(1e-12));
}

TEST_CASE("closed forms agree with an independent digamma series and with quadrature") {
  for (double b : {0.5, 1.0, 2.0})
    for (double beta : {0.5, 1.0, 3.0})
      for (double lambda : {-0.5, 0.0, 2.0}) {
        ModelParams p;
        p.b = b;
        p.beta = beta;
        p.lambda = lambda;
        const double k = lambda + 1.0;
        const Moments m = moments(p);
        CHECK(m.rho == doctest::Approx(k / beta).epsilon(1e-14));
        CHECK(m.tau2 == doctest::Approx(k / (beta * beta)).epsilon(1e-14));
        CHECK(m.v == doctest::Approx((std::log(beta) - oracle::digamma(k)) / b).epsilon(1e-11));
        CHECK(m.sigma2 == doctest::Approx(oracle::trigamma(k) / (b * b)).epsilon(1e-11));
        CHECK(m.delta == doctest::Approx(-1.0 / (b * beta)).epsilon(1e-12));
        // <V> = <xi> - 1 + b <eta>
        CHECK(m.e == doctest::Approx(k / beta - 1.0 + std::log(beta) - oracle::digamma(k)).epsilon(1e-11));

        const Moments q = moments_by_quadrature(p);
        CHECK(q.rho == doctest::Approx(m.rho).epsilon(1e-9));
        CHECK(q.tau2 == doctest::Approx(m.tau2).epsilon(1e-9));
        CHECK(q.v == doctest::Approx(m.v).epsilon(1e-9).scale(1.0));
        CHECK(q.sigma2 == doctest::Approx(m.sigma2).epsilon(1e-9));
        CHECK(q.delta == doctest::Approx(m.delta).epsilon(1e-9));
        CHECK(q.e == doctest::Approx(m.e).epsilon(1e-9).scale(1.0));
      }
}

TEST_CASE("Gibbs sampler matches the site law") {
  ModelParams p;
  p.n = 1000;
  p.lambda = 1.0;
  p.beta = 2.0;
  const auto configs = sample_gibbs(p, 200, 17);
  std::vector<double> xi, eta;
  for (const auto& c : configs) {
    const auto x = xi_of(c, p.b);
    xi.insert(xi.end(), x.begin(), x.end());
    eta.insert(eta.end(), c.eta().begin(), c.eta().end());
  }
  const Moments m = moments(p);
  CHECK(std::abs(mean_of(xi).value - m.rho) <= 4 * mean_of(xi).se);
  CHECK(std::abs(variance_of(xi).value - m.tau2) <= 4 * variance_of(xi).se);
  CHECK(std::abs(mean_of(eta).value - m.v) <= 4 * mean_of(eta).se);
  CHECK(std::abs(variance_of(eta).value - m.sigma2) <= 4 * variance_of(eta).se);
}

TEST_CASE("Gibbs sampling is reproducible per seed and differs across seeds") {
  ModelParams p;
  p.n = 32;
  const auto a = sample_gibbs(p, 3, 5);
  const auto b = sample_gibbs(p, 3, 5);
  const auto c = sample_gibbs(p, 3, 6);
  CHECK(a == b);
  CHECK(a[0] != c[0]);
  CHECK(a[0] != a[1]);
}
