#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/fields.hpp"
#include "fluctlab/spde.hpp"

namespace fluctlab {

struct Estimate {
  double value = 0.0;
  double se = 0.0;  // NaN when fewer than two samples
};

Estimate mean_of(std::span<const double> xs);
// Unbiased sample variance; se from the fourth central moment.
Estimate variance_of(std::span<const double> xs);
// Sample covariance with the se of the mean of centered products.
Estimate covariance_of(std::span<const double> xs, std::span<const double> ys);
// Mean of x_i y_i for quantities whose means are known to vanish.
Estimate product_mean_of(std::span<const double> xs, std::span<const double> ys);

// Per-replica samples of named quantities, reduced in insertion order.
class EnsembleStats {
 public:
  explicit EnsembleStats(std::vector<std::string> keys);

  void add(std::span<const double> sample);
  std::size_t count() const { return count_; }
  const std::vector<std::string>& keys() const { return keys_; }
  std::size_t index(const std::string& key) const;
  std::span<const double> column(std::size_t i) const { return columns_[i]; }

  Estimate mean(std::size_t i) const { return mean_of(columns_[i]); }
  Estimate mean(const std::string& key) const { return mean(index(key)); }
  Estimate variance(std::size_t i) const { return variance_of(columns_[i]); }
  Estimate cov(std::size_t i, std::size_t j) const { return covariance_of(columns_[i], columns_[j]); }

 private:
  std::vector<std::string> keys_;
  std::vector<std::vector<double>> columns_;
  std::size_t count_ = 0;
};

// One line of a results report: {quantity, empirical, predicted, se, z_score, pass}.
struct Report {
  std::string quantity;
  double empirical = 0.0;
  double predicted = 0.0;
  std::optional<double> se;
  std::optional<double> z_score;
  std::optional<bool> pass;
  std::string note;
  // "statistical" (sampling based), "exact" (deterministic check) or
  // "informational" (never gated)
  std::string kind = "statistical";
};

// pass iff |empirical - predicted| <= k se; se, z and pass are empty when se is not finite.
Report compare_se(std::string quantity, const Estimate& empirical, double predicted,
                  double k = 3.0);
// pass iff |empirical - predicted| <= rel |predicted|; se reported when finite.
Report compare_relative(std::string quantity, const Estimate& empirical, double predicted,
                        double rel);

struct ScalingFit {
  std::vector<double> xs;  // log n
  std::vector<double> ys;  // log variance
  std::vector<double> y_se;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

// Weighted least squares of ys on xs with weights 1/y_se^2; when y_se is
// empty, ordinary least squares with the residual-based slope se.
// Throws std::invalid_argument for fewer than 3 points or non-finite logs
// (which is how zero variances show up).
ScalingFit fit_scaling(std::span<const double> xs, std::span<const double> ys,
                       std::span<const double> y_se = {});

// N^n_t.(f1, f2) at every snapshot: field increment minus the trapezoid
// integral of the exact generator action (moving-frame derivative,
// exchange Laplacian and the drift terms).
std::vector<double> martingale_residual(const Trajectory& traj, const ModelParams& params,
                                        const TestFunction& f1, const TestFunction& f2);

// Lattice sum of psi(x/n) {xi_x xi_{x+1} - (box_x)^2 + tau^2 / L}, centered
// xi, box of L = floor(eps n) sites to the right of x.
double bg_integrand(std::span<const double> xi, std::span<const double> psi_lattice, double rho,
                    double tau2, int L);

struct BgResult {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs_shape = 0.0;
};

// int_0^t ||psi||_{2,n}^2 ds {eps + t / (eps^2 n)} for time-independent psi.
double bg_rhs_shape(const ModelParams& params, const TestFunction& psi, double eps, double t);

// int_0^t sum_x psi(x/n) W_x ds along one trajectory, trapezoid on its snapshots.
double bg_time_integral(const Trajectory& traj, const ModelParams& params, const TestFunction& psi,
                        double eps, double t);

// The same integral for several eps along a fresh path from `initial`, with
// the trapezoid rule on every integrator step. The local term decorrelates
// on the time scale 1/(gamma n^2), which coarse snapshots would not resolve.
std::vector<double> bg_time_integrals(const Configuration& initial, const ModelParams& params,
                                      const IntegratorSpec& spec, const TestFunction& psi,
                                      std::span<const double> eps, double t, Rng& rng);

// Limit of E[<N^n . (f1, f2)>_T] at stationarity:
// 2 gamma n^{a-2} [tau^2 T |grad f1|^2 + sigma^2 T |grad f2|^2
//                  + 2 delta int_0^T <grad T^+_{c s} f1, grad f2> ds],
// with c = 0 when a = 2 and kappa > 1 and c = c_n otherwise.
double qv_prediction(const ModelParams& params, const TestFunction& f1, const TestFunction& f2,
                     double T);

// Exact E[(sum_x psi(x/n) W_x)^2] under the product measure, W_x being the
// bg_integrand summand: a quadratic form in centered xi with matrix M gives
// 2 tau^4 tr(M^2) + (mu_4 - 3 tau^4) sum_x M_xx^2.
double bg_static_moment(const ModelParams& params, const TestFunction& psi, double eps);

// lhs = mean over the ensemble of (int_0^t sum_x psi W_x ds)^2 using the
// trajectories' snapshots on [0, t] as trapezoid nodes.
BgResult bg_second_order_test(std::span<const Trajectory> ensemble, const ModelParams& params,
                              const TestFunction& psi, double eps, double t);

// Quadratic drift term of the Y decomposition,
// int_0^t b^2 theta alpha_n n^{-3/2} sum_x grad_n(T^+_{c_n s} f)(x/n) xi_x xi_{x+1} ds
// with centered xi, accumulated by the trapezoid rule on the integrator's steps.
double quadratic_term(const Configuration& initial, const ModelParams& params,
                      const IntegratorSpec& spec, const TestFunction& f, double t, Rng& rng);

struct ScalingPoint {
  int n = 0;
  Estimate variance;
};

struct ScalingResult {
  std::vector<ScalingPoint> points;
  ScalingFit fit;
};

// Variance of quadratic_term across n, each from `replicas` equilibrium starts.
ScalingResult h_minus_one_scaling(const ModelParams& base, std::span<const int> sizes,
                                  const TestFunction& f, double t, std::size_t replicas,
                                  std::uint64_t seed, int workers);

struct CovarianceReport {
  std::vector<Report> entries;
  double max_abs_z = 0.0;
};

// Two-time field covariances E[Z^i_t(h_z) Z^j_s(h_z)] for i, j in {Y, V}
// against (e^{-k^2 A (t - s)} D)_{ij}. samples_s[r] and samples_t[r] are the
// same replica at times s and t.
CovarianceReport covariance_vs_ou(std::span<const FieldSample> samples_s,
                                  std::span<const FieldSample> samples_t, const OUParams& p,
                                  std::span<const int> modes);

}  // namespace fluctlab
