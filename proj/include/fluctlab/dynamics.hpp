#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "fluctlab/fields.hpp"
#include "fluctlab/model.hpp"
#include "fluctlab/rng.hpp"

namespace fluctlab {

enum class Scheme { split_strang, event_driven };

struct IntegratorSpec {
  double dt = 0.0;  // macroscopic step
  Scheme scheme = Scheme::split_strang;
  int ode_substeps = 1;

  // gamma theta(n) dt = 0.5 when gamma > 0; RK4 substeps sized from the
  // drift rate alpha_n theta(n) b^2 at a high quantile of xi.
  static IntegratorSpec defaults(const ModelParams& params);
  void validate() const;

  bool operator==(const IntegratorSpec&) const = default;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> states;
  std::uint64_t exchange_count = 0;
};

// Advances the accelerated process in place. The drift is integrated in
// xi = exp(-b eta) coordinates; exchanges are exact (a Poisson number of
// swaps at uniformly chosen bonds).
class LatticeIntegrator {
 public:
  LatticeIntegrator(const Configuration& initial, const ModelParams& params,
                    const IntegratorSpec& spec);

  // Moves time forward by exactly `duration`, splitting it into equal steps
  // no longer than dt. Throws std::runtime_error on a non-finite state.
  void advance(double duration, Rng& rng);

  double time() const { return t_; }
  std::span<const double> xi() const { return xi_; }
  Configuration configuration() const;
  std::uint64_t exchange_count() const { return exchanges_; }
  const ModelParams& params() const { return params_; }
  const IntegratorSpec& spec() const { return spec_; }

 private:
  void drift(double tau);
  void rk4(double h);
  void exchange(double h, Rng& rng);
  void advance_events(double duration, Rng& rng);
  void check_state() const;
  void swap_sites(std::size_t x);

  ModelParams params_;
  IntegratorSpec spec_;
  std::vector<double> xi_;
  // eta is carried exactly until the first drift; afterwards it is derived from xi
  std::vector<double> eta_;
  bool eta_valid_ = true;
  std::vector<double> k_, acc_, stage_;
  double coupling_;  // alpha_n theta(n) b^2
  double rate_;      // gamma theta(n), per bond
  double t_ = 0.0;
  std::uint64_t exchanges_ = 0;
};

Configuration step(const Configuration& config, const ModelParams& params,
                   const IntegratorSpec& spec, Rng& rng);

Trajectory evolve(const Configuration& initial, const ModelParams& params,
                  const IntegratorSpec& spec, double T, std::span<const double> snapshot_times,
                  Rng& rng);

// n equally spaced snapshot times on [0, T], including both ends.
std::vector<double> uniform_times(double T, int intervals);

// Trapezoid-rule predictable quadratic variation of N^n.(f1, f2) over the
// trajectory's snapshots.
double realized_qv(const Trajectory& traj, const ModelParams& params, const TestFunction& f1,
                   const TestFunction& f2);

// Long-format CSV: t, x, eta.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace fluctlab
