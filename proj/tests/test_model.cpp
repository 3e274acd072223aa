#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/equilibrium.hpp"
#include "fluctlab/model.hpp"
#include "oracles.hpp"

using namespace fluctlab;

namespace {

Configuration random_config(int n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> eta(static_cast<std::size_t>(n));
  for (double& x : eta) x = scale * rng.normal();
  return Configuration(eta);
}

}  // namespace

TEST_CASE("potential and its derivative") {
  for (double b : {0.3, 1.0, 2.5}) {
    CHECK(potential(b, 0.0) == 0.0);
    for (double u : {-2.0, -0.1, 1e-9, 0.7, 4.0}) {
      CHECK(potential(b, u) >= 0.0);
      const double fd = oracle::central_difference([&](double x) { return potential(b, x); }, u);
      CHECK(potential_prime(b, u) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  // no cancellation near the minimum
  CHECK(potential(1.0, 1e-8) == doctest::Approx(0.5e-16).epsilon(1e-6));
}

TEST_CASE("xi round trip") {
  const auto c = random_config(50, 3);
  for (double b : {0.5, 1.0, 2.0}) {
    const auto xi = xi_of(c, b);
    for (double v : xi) CHECK(v > 0.0);
    const auto back = from_xi(xi, b);
    for (std::size_t x = 0; x < c.size(); ++x) CHECK(back[x] == doctest::Approx(c[x]).epsilon(1e-14));
  }
}

TEST_CASE("configuration rejects non-finite entries and wraps indices") {
  CHECK_THROWS_AS(Configuration({0.0, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(Configuration({0.0, INFINITY}), std::invalid_argument);
  const Configuration c({1.0, 2.0, 3.0});
  CHECK(c.at(-1) == 3.0);
  CHECK(c.at(3) == 1.0);
  CHECK(wrap(-7, 3) == 2);
}

TEST_CASE("conserved quantities are invariant under bond exchanges, bitwise") {
  ModelParams p;
  p.n = 64;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Configuration c = random_config(p.n, seed, 3.0);
    const Conserved before = conserved(c, p);
    Rng rng(seed, 9);
    for (int k = 0; k < 200; ++k) c.swap_bond(rng.index(c.size()));
    const Conserved after = conserved(c, p);
    CHECK(before.energy == after.energy);
    CHECK(before.volume == after.volume);
  }
}

TEST_CASE("parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.kappa = -1;
  CHECK_THROWS_WITH(p.validate(), "kappa must be >= 0");
  p = ModelParams{};
  p.a = 2.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = ModelParams{};
  p.gamma = 0.0;
  CHECK_NOTHROW(p.validate());
  p.lambda = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = ModelParams{};
  p.n = 1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("currents satisfy the continuity equations of the generator") {
  // L eta_x / theta = alpha_n drift_x + gamma Delta eta_x should equal jv_{x-1} - jv_x,
  // and likewise for V_b(eta_x) with je.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ModelParams p;
    p.n = 16;
    p.b = 0.5 + 0.2 * double(seed);
    p.gamma = 0.3 * double(seed);
    p.alpha = 1.0 - 0.15 * double(seed);
    p.kappa = 0.5;
    const Configuration c = random_config(p.n, seed);
    const auto drift = drift_field(c, p);
    for (std::size_t x = 0; x < c.size(); ++x) {
      const auto xp = wrap(std::ptrdiff_t(x) + 1, c.size());
      const auto xm = wrap(std::ptrdiff_t(x) - 1, c.size());
      const double lap = c[xp] + c[xm] - 2.0 * c[x];
      const double Leta = p.alpha_n() * drift[x] + p.gamma * lap;
      CHECK(currents(c, p, xm).jv - currents(c, p, x).jv == doctest::Approx(Leta).epsilon(1e-10));

      // energy: chain rule by finite differences along the drift direction
      const double dV = oracle::central_difference(
          [&](double h) { return potential(p.b, c[x] + h * p.alpha_n() * drift[x]); }, 0.0, 1e-6);
      const double lapV = potential(p.b, c[xp]) + potential(p.b, c[xm]) - 2.0 * potential(p.b, c[x]);
      CHECK(currents(c, p, xm).je - currents(c, p, x).je ==
            doctest::Approx(dV + p.gamma * lapV).epsilon(1e-6));
    }
  }
}

TEST_CASE("currents reject out-of-range bonds") {
  ModelParams p;
  p.n = 4;
  const Configuration c = Configuration::constant(4, 0.1);
  CHECK_THROWS_AS(currents(c, p, 4), std::out_of_range);
}

TEST_CASE("constant configurations are fixed points of the drift") {
  ModelParams p;
  p.n = 10;
  const auto d = drift_field(Configuration::constant(10, 0.7), p);
  for (double v : d) CHECK(v == 0.0);
}
