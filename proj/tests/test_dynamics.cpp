#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/equilibrium.hpp"
#include "fluctlab/verify.hpp"
#include "oracles.hpp"

using namespace fluctlab;

TEST_CASE("drift-only evolution matches an adaptive ODE solve of the xi system") {
  ModelParams p;
  p.n = 8;
  p.gamma = 0.0;
  p.alpha = 1.3;
  const Configuration c0 = sample_gibbs(p, 1, 4)[0];
  const double T = 0.05;
  Rng rng(1);
  const auto traj = evolve(c0, p, IntegratorSpec::defaults(p), T, std::vector<double>{T}, rng);

  const double coupling = p.alpha_n() * p.theta_n() * p.b * p.b;
  auto f = [&](const std::vector<double>& xi, std::vector<double>& out) {
    const std::size_t n = xi.size();
    for (std::size_t x = 0; x < n; ++x)
      out[x] = coupling * xi[x] * (xi[(x + 1) % n] - xi[(x + n - 1) % n]);
  };
  const auto ref = oracle::integrate_ode(f, xi_of(c0, p.b), T);
  const auto got = xi_of(traj.states.back(), p.b);
  for (std::size_t x = 0; x < ref.size(); ++x) CHECK(got[x] == doctest::Approx(ref[x]).epsilon(1e-7));
  CHECK(traj.exchange_count == 0);
}

TEST_CASE("exchange-only runs permute the configuration") {
  ModelParams p;
  p.n = 40;
  p.alpha = 0.0;
  const Configuration c0 = sample_gibbs(p, 1, 8)[0];
  for (Scheme s : {Scheme::split_strang, Scheme::event_driven}) {
    IntegratorSpec spec = IntegratorSpec::defaults(p);
    spec.scheme = s;
    Rng rng(3);
    const auto traj = evolve(c0, p, spec, 0.01, std::vector<double>{0.01}, rng);
    auto a = std::vector<double>(c0.eta().begin(), c0.eta().end());
    auto b = std::vector<double>(traj.states[0].eta().begin(), traj.states[0].eta().end());
    CHECK(a != b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(conserved(c0, p).energy == conserved(traj.states[0], p).energy);
    CHECK(conserved(c0, p).volume == conserved(traj.states[0], p).volume);
  }
}

TEST_CASE("exchange count is Poisson with mean gamma theta n T") {
  ModelParams p;
  p.n = 16;
  p.alpha = 0.0;
  p.gamma = 0.7;
  const double T = 0.02;
  const double mean = p.gamma * p.theta_n() * p.n * T;
  const Configuration c0 = Configuration::constant(p.n, 0.0);
  for (Scheme s : {Scheme::split_strang, Scheme::event_driven}) {
    IntegratorSpec spec = IntegratorSpec::defaults(p);
    spec.scheme = s;
    std::vector<double> counts;
    for (int r = 0; r < 400; ++r) {
      Rng rng(11, std::uint64_t(r));
      counts.push_back(double(evolve(c0, p, spec, T, {}, rng).exchange_count));
    }
    const Estimate m = mean_of(counts);
    CHECK(std::abs(m.value - mean) <= 4 * std::sqrt(mean / 400.0));
    CHECK(variance_of(counts).value == doctest::Approx(mean).epsilon(0.2));
  }
}

TEST_CASE("evolution is deterministic per seed") {
  ModelParams p;
  p.n = 32;
  p.kappa = 0.5;
  const Configuration c0 = sample_gibbs(p, 1, 2)[0];
  const auto times = uniform_times(0.01, 4);
  Rng r1(42), r2(42), r3(43);
  const auto a = evolve(c0, p, IntegratorSpec::defaults(p), 0.01, times, r1);
  const auto b = evolve(c0, p, IntegratorSpec::defaults(p), 0.01, times, r2);
  const auto c = evolve(c0, p, IntegratorSpec::defaults(p), 0.01, times, r3);
  CHECK(a.states == b.states);
  CHECK(a.exchange_count == b.exchange_count);
  CHECK(a.states.back() != c.states.back());
  CHECK(a.states.front() == c0);
}

TEST_CASE("full dynamics conserve sum xi to rounding and sum V to the integrator tolerance") {
  ModelParams p;
  p.n = 64;
  const Configuration c0 = sample_gibbs(p, 1, 21)[0];
  Rng rng(5);
  const auto traj = evolve(c0, p, IntegratorSpec::defaults(p), 0.2, std::vector<double>{0.2}, rng);
  auto sum_xi = [&](const Configuration& c) {
    double s = 0;
    for (double v : xi_of(c, p.b)) s += v;
    return s;
  };
  const double e0 = conserved(c0, p).energy, e1 = conserved(traj.states[0], p).energy;
  CHECK(std::abs(sum_xi(traj.states[0]) - sum_xi(c0)) / sum_xi(c0) <= 1e-12);
  CHECK(std::abs(e1 - e0) / std::abs(e0) <= 1e-8);
}

TEST_CASE("snapshot times land exactly and invalid arguments are rejected") {
  ModelParams p;
  p.n = 16;
  const Configuration c0 = Configuration::constant(16, 0.0);
  Rng rng(1);
  const std::vector<double> times{0.0, 0.003, 0.01};
  const auto traj = evolve(c0, p, IntegratorSpec::defaults(p), 0.01, times, rng);
  CHECK(traj.times == times);
  CHECK_THROWS_AS(evolve(c0, p, IntegratorSpec::defaults(p), 0.01, std::vector<double>{0.02}, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(evolve(c0, p, IntegratorSpec::defaults(p), 0.01, std::vector<double>{0.005, 0.001}, rng),
                  std::invalid_argument);
  IntegratorSpec bad;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(LatticeIntegrator(c0, p, bad), std::invalid_argument);
}

TEST_CASE("realized QV of a constant path vanishes and trajectory CSV is long format") {
  ModelParams p;
  p.n = 8;
  Trajectory traj;
  traj.times = {0.0, 1.0};
  traj.states = {Configuration::constant(8, 0.3), Configuration::constant(8, 0.3)};
  CHECK(realized_qv(traj, p, TestFunction::mode(1), TestFunction::mode(1)) == 0.0);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  std::string first;
  std::istringstream is(os.str());
  std::getline(is, first);
  CHECK(first == "t,x,eta");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 16);
}
