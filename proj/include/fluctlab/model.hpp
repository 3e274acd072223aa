#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fluctlab {

// Parameters of the lattice model and of the scaling regime.
struct ModelParams {
  double b = 1.0;
  double gamma = 1.0;
  double alpha = 1.0;
  double kappa = 1.0;
  double a = 2.0;
  int n = 128;
  double beta = 1.0;
  double lambda = 0.0;

  double alpha_n() const;  // alpha * n^-kappa
  double theta_n() const;  // n^a

  // Throws std::invalid_argument on the first violated constraint.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

inline std::size_t wrap(std::ptrdiff_t x, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t r = x % m;
  return static_cast<std::size_t>(r < 0 ? r + m : r);
}

// Lattice state eta on the discrete torus of size n.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<double> eta);

  static Configuration constant(int n, double value);

  std::size_t size() const { return eta_.size(); }
  double operator[](std::size_t x) const { return eta_[x]; }
  double& operator[](std::size_t x) { return eta_[x]; }
  double at(std::ptrdiff_t x) const { return eta_[wrap(x, eta_.size())]; }

  std::span<const double> eta() const { return eta_; }
  std::vector<double>& values() { return eta_; }

  // eta -> eta^{x,x+1}
  void swap_bond(std::size_t x);

  bool operator==(const Configuration&) const = default;

 private:
  std::vector<double> eta_;
};

double potential(double b, double u);
double potential_prime(double b, double u);

std::vector<double> xi_of(const Configuration& config, double b);
Configuration from_xi(std::span<const double> xi, double b);

struct Conserved {
  double energy;
  double volume;
};

// Sums are taken in sorted order so that any permutation of the sites,
// bond exchanges in particular, yields bitwise-identical results.
Conserved conserved(const Configuration& config, const ModelParams& params);

// V'(eta_{x+1}) - V'(eta_{x-1}), before the alpha_n * theta(n) prefactor.
std::vector<double> drift_field(const Configuration& config, const ModelParams& params);

struct Currents {
  double je;
  double jv;
};

// Energy and volume currents across the bond (x, x+1).
Currents currents(const Configuration& config, const ModelParams& params, std::size_t x);

}  // namespace fluctlab
