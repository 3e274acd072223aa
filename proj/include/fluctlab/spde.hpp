#pragma once

#include <Eigen/Dense>
#include <complex>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "fluctlab/fields.hpp"
#include "fluctlab/rng.hpp"

namespace fluctlab {

// Mode coefficients zhat_z = Z(e^{-i 2 pi z .}) for 0 <= z <= z_max and each
// component; negative modes are the conjugates, so the field is real.
// Components are indexed from 0.
class SpectralState {
 public:
  SpectralState() = default;
  SpectralState(int z_max, int comps, double t = 0.0);

  int z_max() const { return z_max_; }
  int comps() const { return comps_; }

  std::complex<double>& at(int comp, int z);
  const std::complex<double>& at(int comp, int z) const;
  // Any |z| <= z_max; conjugate for z < 0.
  std::complex<double> coeff(int comp, int z) const;

  // Z(h_z): sqrt2 Re zhat_z for z > 0, sqrt2 Im zhat_|z| for z < 0, Re zhat_0.
  double basis_value(int comp, int z) const;
  void set_basis_values(int comp, int z, double value_pos, double value_neg);
  // Z(f) for a finite expansion; modes beyond z_max contribute nothing.
  double test(int comp, const TestFunction& f) const;

  double t = 0.0;

 private:
  int z_max_ = 0;
  int comps_ = 1;
  std::vector<std::complex<double>> data_;
};

struct OUParams {
  Eigen::MatrixXd A;
  Eigen::MatrixXd C;
  void validate() const;
};

struct DriftedOUParams {
  double lam = 1.0;
  double mu = 1.0;
  double theta = 0.0;
  double c = 0.0;
  double a_ = 1.0;
  double b_ = 0.0;
  double d_ = 1.0;
  void validate() const;
};

// Solves A D + D A^T = 2 C. Throws std::domain_error unless A is positive definite.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

SpectralState ou_sample_stationary(const OUParams& p, int z_max, Rng& rng);
// Exact Gaussian transition of every mode over dt.
SpectralState ou_step(const SpectralState& state, const OUParams& p, double dt, Rng& rng);
// ou_step with the per-mode transitions computed once for a fixed dt.
class OUPropagator {
 public:
  OUPropagator(const OUParams& p, int z_max, double dt);
  void step(SpectralState& state, Rng& rng) const;
  double dt() const { return dt_; }

 private:
  int d_;
  int z_max_;
  double dt_;
  std::vector<Eigen::MatrixXd> mean_;
  std::vector<Eigen::MatrixXd> noise_;
};

// Stationary two-time covariance e^{-k^2 A lag} D of the mode vector, k = 2 pi z.
Eigen::MatrixXd ou_mode_covariance(const OUParams& p, int z, double lag);

// Real mode coordinates (Z1(h_z), Z1(h_-z), Z2(h_z), Z2(h_-z)) for z > 0:
// drift matrix and per-unit-time noise covariance at time t.
Eigen::Matrix4d drifted_ou_drift(const DriftedOUParams& p, int z, double t);
Eigen::Matrix4d drifted_ou_noise(const DriftedOUParams& p, int z, double t);

// White initial field with component covariance
// [[a/(2 lam), b/(lam+mu)], [b/(lam+mu), d/(2 mu)]].
SpectralState drifted_ou_sample_initial(const DriftedOUParams& p, int z_max, Rng& rng);

// One step with the shift phase frozen at the midpoint of [t, t + dt].
SpectralState drifted_ou_step(const SpectralState& state, const DriftedOUParams& p, double dt,
                              Rng& rng);

// Transition matrix of the noiseless drifted OU mode from s to t
// (midpoint-frozen phase on `substeps` equal pieces).
Eigen::Matrix4d drifted_ou_propagator(const DriftedOUParams& p, int z, double s, double t,
                                      int substeps);

// Trivial transport: Z1 frozen, Z2_t(f) = Z2_0(f) + theta int_0^t Z1_0(grad T^-_{cs} f) ds.
std::pair<double, double> transport_solve(const SpectralState& initial, double theta, double c,
                                          double t, const TestFunction& f);

// dt |B| N max_j |Y_j| on the collocation grid.
double sbe_cfl_number(const SpectralState& state, double B, double dt);
inline constexpr double kSbeCflLimit = 0.5;
// dt with CFL number kSbeCflLimit / 2 at a white-noise amplitude of 6 standard deviations.
double sbe_default_dt(int z_max, double A, double B, double C);

// Collocation grid values Y(j / N), N = 2 z_max + 1, and the inverse map.
std::vector<double> to_grid(const SpectralState& state);
void from_grid(std::span<const double> grid, SpectralState& state);

// Nonlinear collocation flow dY_j/dt = B N (F_j - F_{j-1}) with the
// three-point flux F_j = (Y_{j+1}^2 + Y_{j+1} Y_j + Y_j^2) / 3, one RK4 step.
void sbe_nonlinear_step(SpectralState& state, double B, double dt);

// Nonlinear substep then the exact OU step with A, C. Throws
// std::domain_error if the CFL number exceeds kSbeCflLimit.
SpectralState sbe_step(const SpectralState& state, double A, double B, double C, double dt,
                       Rng& rng);

// sbe_step for fixed coefficients, reusing the OU transitions and grid buffers.
class SbeStepper {
 public:
  SbeStepper(int z_max, double A, double B, double C, double dt);
  void step(SpectralState& state, Rng& rng);
  double dt() const { return ou_.dt(); }

 private:
  double B_;
  OUPropagator ou_;
  std::vector<double> y_, k_, acc_, st_;
};

// Online trapezoid accumulation of
// Q^eps = int int_T (Y_r(iota_eps(u)))^2 grad f(u) du dr for several eps at
// once. Y(iota_eps(u)) = sum_z zhat_z e^{i k u} (e^{i k eps} - 1)/(i k eps);
// the spatial integral is exact on a grid of 2(2 z_max + 1) points.
class QuadraticFunctional {
 public:
  QuadraticFunctional(int z_max, const TestFunction& f, std::vector<double> eps);
  void add(const SpectralState& state);
  const std::vector<double>& values() const { return q_; }
  std::size_t count() const { return count_; }

 private:
  std::vector<double> spatial_terms(const SpectralState& state);

  int z_max_;
  int M_;
  std::vector<double> eps_;
  std::vector<double> grad_f_;  // grad f on the quadrature grid
  std::vector<double> q_, prev_;
  double prev_t_ = 0.0;
  std::size_t count_ = 0;
};

// int_s^t int_T (Y_r(iota_eps(u)))^2 grad f(u) du dr over the stored path
// (trapezoid in time, exact spatial quadrature).
double sbe_quadratic_functional(std::span<const SpectralState> path, const TestFunction& f,
                                double eps);
// Mean over paths of (Q^eps1 - Q^eps2)^2.
double sbe_energy_estimate(std::span<const std::vector<SpectralState>> paths,
                           const TestFunction& f, double eps1, double eps2);

// Columns z, comp, re, im.
void write_spectral_csv(std::ostream& out, const SpectralState& state);

}  // namespace fluctlab
