#include "fluctlab/equilibrium.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fluctlab {

GammaLaw site_law(const ModelParams& params) {
  if (!(params.beta > 0) || !(params.lambda > -1)) {
    throw std::invalid_argument("invalid Gamma shape/rate: need beta > 0 and lambda > -1");
  }
  return {params.lambda + 1.0, params.beta};
}

Moments moments(const ModelParams& params) {
  const auto [k, beta] = site_law(params);
  const double b = params.b;
  Moments m{};
  m.rho = k / beta;
  m.tau2 = k / (beta * beta);
  m.v = (std::log(beta) - boost::math::digamma(k)) / b;
  m.sigma2 = boost::math::trigamma(k) / (b * b);
  m.delta = -1.0 / (b * beta);
  m.e = m.rho - 1.0 + b * m.v;
  return m;
}

Moments moments_by_quadrature(const ModelParams& params) {
  const auto [k, beta] = site_law(params);
  const double b = params.b;
  // Density of eta: b beta^k / Gamma(k) exp(-b k eta - beta e^{-b eta}).
  // Integrate in s with eta = mode + s / (b sqrt(k)), which centers and
  // scales the bulk regardless of the parameters.
  const double mode = -std::log(k / beta) / b;
  const double width = 1.0 / (b * std::sqrt(k));
  const double log_norm = std::log(b) + k * std::log(beta) - std::lgamma(k) + std::log(width);
  auto density = [&](double s) {
    const double eta = mode + s * width;
    const double lp = log_norm - b * k * eta - beta * std::exp(-b * eta);
    return std::exp(lp);
  };

  // log density relative to its peak is -sqrt(k) s - k (e^{-s/sqrt(k)} - 1);
  // cut both tails where it falls below -120
  const double rk = std::sqrt(k);
  auto drop = [&](double s) { return rk * s + k * std::expm1(-s / rk); };
  double s_lo = -1.0;
  while (drop(s_lo) < 120.0) s_lo *= 2.0;
  double s_hi = 1.0;
  while (drop(s_hi) < 120.0) s_hi *= 2.0;
  auto integrate = [&](auto&& g) {
    double err = 0.0;
    double l1 = 0.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double s) { return g(mode + s * width) * density(s); }, s_lo, s_hi, 30, 1e-14, &err,
        &l1);
    if (!std::isfinite(val) || err > 1e-10 * std::max(1.0, l1)) {
      throw std::runtime_error("moment quadrature did not converge to 1e-10");
    }
    return val;
  };

  const double mass = integrate([](double) { return 1.0; });
  const double mean_xi = integrate([&](double eta) { return std::exp(-b * eta); }) / mass;
  const double mean_eta = integrate([](double eta) { return eta; }) / mass;
  Moments m{};
  m.rho = mean_xi;
  m.v = mean_eta;
  m.tau2 = integrate([&](double eta) {
             const double d = std::exp(-b * eta) - mean_xi;
             return d * d;
           }) / mass;
  m.sigma2 = integrate([&](double eta) { return (eta - mean_eta) * (eta - mean_eta); }) / mass;
  m.delta = integrate([&](double eta) { return (eta - mean_eta) * (std::exp(-b * eta) - mean_xi); }) /
            mass;
  m.e = integrate([&](double eta) { return potential(b, eta); }) / mass;
  return m;
}

void sample_gibbs_into(const ModelParams& params, Rng& rng, Configuration& config) {
  const auto [k, beta] = site_law(params);
  auto& eta = config.values();
  eta.resize(static_cast<std::size_t>(params.n));
  for (double& x : eta) {
    double xi = rng.gamma(k, beta);
    // shape < 1 can underflow to exactly 0 in double precision
    if (xi <= 0.0) xi = std::numeric_limits<double>::min();
    x = -std::log(xi) / params.b;
  }
}

std::vector<Configuration> sample_gibbs(const ModelParams& params, std::size_t count,
                                        std::uint64_t seed) {
  std::vector<Configuration> out(count);
  for (std::size_t r = 0; r < count; ++r) {
    Rng rng(seed, r);
    sample_gibbs_into(params, rng, out[r]);
  }
  return out;
}

}  // namespace fluctlab
