#include "fluctlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fluctlab {

double ModelParams::alpha_n() const { return alpha * std::pow(static_cast<double>(n), -kappa); }

double ModelParams::theta_n() const { return std::pow(static_cast<double>(n), a); }

void ModelParams::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(std::isfinite(b) && b > 0, "b must be > 0");
  require(std::isfinite(gamma) && gamma >= 0, "gamma must be >= 0");
  require(std::isfinite(alpha), "alpha must be finite");
  require(std::isfinite(kappa) && kappa >= 0, "kappa must be >= 0");
  require(std::isfinite(a) && a > 0 && a <= 2, "a must lie in (0, 2]");
  require(n >= 2, "n must be >= 2");
  require(std::isfinite(beta) && beta > 0, "beta must be > 0");
  require(std::isfinite(lambda) && lambda > -1, "lambda must be > -1");
  require(std::isfinite(alpha_n()) && std::isfinite(theta_n()), "alpha_n and theta_n must be finite");
}

Configuration::Configuration(std::vector<double> eta) : eta_(std::move(eta)) {
  for (double v : eta_) {
    if (!std::isfinite(v)) throw std::invalid_argument("configuration entries must be finite");
  }
}

Configuration Configuration::constant(int n, double value) {
  return Configuration(std::vector<double>(static_cast<std::size_t>(n), value));
}

void Configuration::swap_bond(std::size_t x) {
  std::swap(eta_[x], eta_[(x + 1) % eta_.size()]);
}

double potential(double b, double u) {
  // expm1 keeps the cancellation near u = 0 harmless
  return std::expm1(-b * u) + b * u;
}

double potential_prime(double b, double u) { return -b * std::expm1(-b * u); }

std::vector<double> xi_of(const Configuration& config, double b) {
  std::vector<double> xi(config.size());
  for (std::size_t x = 0; x < xi.size(); ++x) xi[x] = std::exp(-b * config[x]);
  return xi;
}

Configuration from_xi(std::span<const double> xi, double b) {
  std::vector<double> eta(xi.size());
  for (std::size_t x = 0; x < xi.size(); ++x) eta[x] = -std::log(xi[x]) / b;
  return Configuration(std::move(eta));
}

namespace {

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

Conserved conserved(const Configuration& config, const ModelParams& params) {
  std::vector<double> energy(config.size());
  for (std::size_t x = 0; x < config.size(); ++x) energy[x] = potential(params.b, config[x]);
  return {sorted_sum(std::move(energy)), sorted_sum({config.eta().begin(), config.eta().end()})};
}

std::vector<double> drift_field(const Configuration& config, const ModelParams& params) {
  const std::size_t n = config.size();
  std::vector<double> vp(n);
  for (std::size_t x = 0; x < n; ++x) vp[x] = potential_prime(params.b, config[x]);
  std::vector<double> out(n);
  for (std::size_t x = 0; x < n; ++x) out[x] = vp[(x + 1) % n] - vp[(x + n - 1) % n];
  return out;
}

Currents currents(const Configuration& config, const ModelParams& params, std::size_t x) {
  const std::size_t n = config.size();
  if (x >= n) throw std::out_of_range("site index " + std::to_string(x) + " out of range");
  const double b = params.b;
  const double an = params.alpha_n();
  const double e0 = config[x];
  const double e1 = config[(x + 1) % n];
  const double x0 = std::exp(-b * e0);
  const double x1 = std::exp(-b * e1);
  const double je = -an * b * b * x0 * x1 + an * b * b * (x0 + x1) -
                    params.gamma * (potential(b, e1) - potential(b, e0));
  const double jv = an * b * (x0 + x1) - params.gamma * (e1 - e0);
  return {je, jv};
}

}  // namespace fluctlab
