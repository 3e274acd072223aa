#pragma once

#include <map>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "fluctlab/equilibrium.hpp"
#include "fluctlab/model.hpp"

namespace fluctlab {

// h_z(u): sqrt2 cos(2 pi z u) for z > 0, sqrt2 sin(2 pi z u) for z < 0, 1 for z = 0.
double h_basis(int z, double u);

// 1 + 4 pi^2 z^2
double gamma_z(int z);

// Finite expansion f = sum_z a_z h_z.
class TestFunction {
 public:
  TestFunction() = default;
  explicit TestFunction(std::map<int, double> coefficients);
  static TestFunction mode(int z);

  const std::map<int, double>& coefficients() const { return coeffs_; }
  double coefficient(int z) const;
  bool is_zero() const;

  double operator()(double u) const;
  double derivative(double u) const;

  TestFunction gradient() const;
  TestFunction laplacian() const;
  // (T^+_c f)(u) = f(u + c), exact as a rotation of each (h_z, h_-z) pair.
  TestFunction shifted(double c) const;

  friend TestFunction operator+(const TestFunction& f, const TestFunction& g);
  friend TestFunction operator-(const TestFunction& f, const TestFunction& g);
  friend TestFunction operator*(double s, const TestFunction& f);

 private:
  std::map<int, double> coeffs_;
};

// <f, g>_0 on the continuum torus.
double inner(const TestFunction& f, const TestFunction& g);
inline double norm2(const TestFunction& f) { return inner(f, f); }

// 2 b^2 rho alpha n^{a-kappa-1}
double cn(const ModelParams& params);
// 2 b^2 rho alpha
double frame_velocity(const ModelParams& params);

// c t reduced to [0, 1) with the rounding error of the product carried along.
double frame_offset(double c, double t);

// Y^n_t(f) = n^{-1/2} sum_x f(x/n + c_n t) (xi_x - rho), by pointwise evaluation.
double field_Y(const Configuration& config, double t, const TestFunction& f,
               const ModelParams& params);
// V^n_t(f) = n^{-1/2} sum_x f(x/n) (eta_x - v)
double field_V(const Configuration& config, double t, const TestFunction& f,
               const ModelParams& params);

// sum_z (first_z^2 + second_z^2) gamma_z^{-k}
double h_minus_k_norm(const std::map<int, std::pair<double, double>>& values, int k);

// mean of xi_y - rho over the floor(eps n) sites to the right of x
double box_average(const Configuration& config, std::size_t x, double eps,
                   const ModelParams& params);

struct FieldSample {
  double t = 0.0;
  std::map<int, double> y;  // Y^n_t(h_z)
  std::map<int, double> v;  // V^n_t(h_z)
  double frame_offset = 0.0;
};

FieldSample sample_fields(const Configuration& config, double t, std::span<const int> modes,
                          const ModelParams& params);

// Columns t, z, Y, V.
void write_field_csv(std::ostream& out, std::span<const FieldSample> samples);

// Precomputed lattice tables for repeated projections of a path onto a fixed
// set of modes. Works on xi directly so the integrator state can be used
// without building a Configuration.
class ModeProjector {
 public:
  ModeProjector(const ModelParams& params, std::vector<int> modes);

  const std::vector<int>& modes() const { return modes_; }
  std::size_t size() const { return static_cast<std::size_t>(n_); }
  double rho() const { return mom_.rho; }
  double v() const { return mom_.v; }
  double cn() const { return cn_; }
  const Moments& moments() const { return mom_; }

  // h_z(x/n) for each mode in modes(); row-major [mode][x]
  double table(std::size_t mode_index, std::size_t x) const {
    return table_[mode_index * static_cast<std::size_t>(n_) + x];
  }
  // position of z in modes(), or -1
  int mode_index(int z) const;

  // Lattice sums S_z = n^{-1/2} sum_x h_z(x/n) w_x for every z in modes().
  // The mode set is closed under z -> -z internally.
  std::vector<double> lattice_sums(std::span<const double> w) const;

  // Y^n_t(h_z) for z in modes(), from xi. Uses the frame rotation of the
  // lattice sums rather than evaluating shifted functions.
  std::vector<double> project_Y(std::span<const double> xi, double t) const;
  // V^n_t(h_z) for z in modes(), from xi.
  std::vector<double> project_V(std::span<const double> xi) const;

  // Values f(x/n + offset) for x = 0..n-1 of a finite expansion.
  std::vector<double> evaluate_on_lattice(const TestFunction& f, double offset) const;

 private:
  int n_;
  double b_;
  Moments mom_;
  double cn_;
  std::vector<int> modes_;
  std::vector<double> table_;
  std::map<int, int> index_;
};

}  // namespace fluctlab
