#include "fluctlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fluctlab/equilibrium.hpp"
#include "fluctlab/io.hpp"

namespace fluctlab {

IntegratorSpec IntegratorSpec::defaults(const ModelParams& params) {
  const double theta = params.theta_n();
  const double coupling = std::abs(params.alpha_n()) * theta * params.b * params.b;
  const Moments m = moments(params);
  const double xi_scale = m.rho + 8.0 * std::sqrt(m.tau2);
  const double drift_rate = coupling * xi_scale;

  IntegratorSpec spec;
  if (params.gamma > 0) {
    spec.dt = 0.5 / (params.gamma * theta);
  } else {
    spec.dt = drift_rate > 0 ? 0.5 / drift_rate : 1.0;
  }
  spec.ode_substeps = std::max(1, static_cast<int>(std::ceil(drift_rate * spec.dt / 0.02)));
  return spec;
}

void IntegratorSpec::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
  if (ode_substeps < 1) throw std::invalid_argument("ode_substeps must be >= 1");
}

LatticeIntegrator::LatticeIntegrator(const Configuration& initial, const ModelParams& params,
                                     const IntegratorSpec& spec)
    : params_(params), spec_(spec) {
  params_.validate();
  spec_.validate();
  if (initial.size() != static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("configuration length must equal n");
  }
  xi_ = xi_of(initial, params.b);
  eta_.assign(initial.eta().begin(), initial.eta().end());
  k_.resize(xi_.size());
  acc_.resize(xi_.size());
  stage_.resize(xi_.size());
  coupling_ = params.alpha_n() * params.theta_n() * params.b * params.b;
  rate_ = params.gamma * params.theta_n();
}

Configuration LatticeIntegrator::configuration() const {
  return eta_valid_ ? Configuration(eta_) : from_xi(xi_, params_.b);
}

void LatticeIntegrator::swap_sites(std::size_t x) {
  const std::size_t y = x + 1 == xi_.size() ? 0 : x + 1;
  std::swap(xi_[x], xi_[y]);
  if (eta_valid_) std::swap(eta_[x], eta_[y]);
}

void LatticeIntegrator::check_state() const {
  for (double v : xi_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::runtime_error("integrator blow-up at t = " + std::to_string(t_) +
                               ": xi left (0, inf); reduce dt or raise ode_substeps");
    }
  }
}

namespace {

// out = c * xi_x (xi_{x+1} - xi_{x-1})
void rhs(const std::vector<double>& xi, double c, std::vector<double>& out) {
  const std::size_t n = xi.size();
  out[0] = c * xi[0] * (xi[1] - xi[n - 1]);
  for (std::size_t x = 1; x + 1 < n; ++x) out[x] = c * xi[x] * (xi[x + 1] - xi[x - 1]);
  out[n - 1] = c * xi[n - 1] * (xi[0] - xi[n - 2]);
}

}  // namespace

void LatticeIntegrator::rk4(double h) {
  const std::size_t n = xi_.size();
  rhs(xi_, coupling_, k_);
  for (std::size_t x = 0; x < n; ++x) {
    acc_[x] = k_[x];
    stage_[x] = xi_[x] + 0.5 * h * k_[x];
  }
  rhs(stage_, coupling_, k_);
  for (std::size_t x = 0; x < n; ++x) {
    acc_[x] += 2.0 * k_[x];
    stage_[x] = xi_[x] + 0.5 * h * k_[x];
  }
  rhs(stage_, coupling_, k_);
  for (std::size_t x = 0; x < n; ++x) {
    acc_[x] += 2.0 * k_[x];
    stage_[x] = xi_[x] + h * k_[x];
  }
  rhs(stage_, coupling_, k_);
  for (std::size_t x = 0; x < n; ++x) xi_[x] += h / 6.0 * (acc_[x] + k_[x]);
}

void LatticeIntegrator::drift(double tau) {
  if (coupling_ == 0.0 || tau <= 0.0) return;
  const double h_max = spec_.dt / spec_.ode_substeps;
  const auto m = static_cast<long>(std::ceil(tau / h_max * (1.0 - 1e-12)));
  const double h = tau / double(std::max(1L, m));
  for (long i = 0; i < std::max(1L, m); ++i) rk4(h);
  eta_valid_ = false;
  check_state();
}

void LatticeIntegrator::exchange(double h, Rng& rng) {
  if (rate_ == 0.0) return;
  const std::size_t n = xi_.size();
  const std::uint64_t k = rng.poisson(rate_ * double(n) * h);
  for (std::uint64_t i = 0; i < k; ++i) swap_sites(rng.index(n));
  exchanges_ += k;
}

void LatticeIntegrator::advance_events(double duration, Rng& rng) {
  const std::size_t n = xi_.size();
  const double total_rate = rate_ * double(n);
  double left = duration;
  while (left > 0.0) {
    const double wait = total_rate > 0 ? rng.exponential(total_rate) : left + 1.0;
    if (wait >= left) {
      drift(left);
      break;
    }
    drift(wait);
    left -= wait;
    swap_sites(rng.index(n));
    ++exchanges_;
  }
}

void LatticeIntegrator::advance(double duration, Rng& rng) {
  if (duration < 0) throw std::invalid_argument("advance needs a nonnegative duration");
  if (duration == 0) return;
  if (spec_.scheme == Scheme::event_driven) {
    advance_events(duration, rng);
  } else {
    const auto steps = static_cast<long>(std::ceil(duration / spec_.dt * (1.0 - 1e-12)));
    const long m = std::max(1L, steps);
    const double h = duration / double(m);
    // Strang splitting with the interior half-drifts merged.
    drift(0.5 * h);
    for (long i = 0; i < m; ++i) {
      exchange(h, rng);
      drift(i + 1 < m ? h : 0.5 * h);
    }
  }
  t_ += duration;
}

Configuration step(const Configuration& config, const ModelParams& params,
                   const IntegratorSpec& spec, Rng& rng) {
  LatticeIntegrator integ(config, params, spec);
  integ.advance(spec.dt, rng);
  return integ.configuration();
}

Trajectory evolve(const Configuration& initial, const ModelParams& params,
                  const IntegratorSpec& spec, double T, std::span<const double> snapshot_times,
                  Rng& rng) {
  if (!(T >= 0)) throw std::invalid_argument("T must be >= 0");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    if (snapshot_times[i] < 0 || snapshot_times[i] > T) {
      throw std::invalid_argument("snapshot times must lie in [0, T]");
    }
    if (i > 0 && !(snapshot_times[i] > snapshot_times[i - 1])) {
      throw std::invalid_argument("snapshot times must be strictly increasing");
    }
  }
  LatticeIntegrator integ(initial, params, spec);
  Trajectory traj;
  for (double s : snapshot_times) {
    integ.advance(s - integ.time(), rng);
    traj.times.push_back(s);
    traj.states.push_back(integ.configuration());
  }
  if (integ.time() < T) integ.advance(T - integ.time(), rng);
  traj.exchange_count = integ.exchange_count();
  return traj;
}

std::vector<double> uniform_times(double T, int intervals) {
  std::vector<double> out(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) out[std::size_t(i)] = T * double(i) / double(intervals);
  out.back() = T;
  return out;
}

double realized_qv(const Trajectory& traj, const ModelParams& params, const TestFunction& f1,
                   const TestFunction& f2) {
  if (traj.times.size() < 2) throw std::invalid_argument("realized_qv needs >= 2 snapshots");
  const std::size_t n = static_cast<std::size_t>(params.n);
  const double nd = double(n);
  const double c = cn(params);
  const double pref = params.gamma * params.theta_n() / (nd * nd * nd);

  std::vector<double> grad2(n);
  for (std::size_t x = 0; x < n; ++x) {
    grad2[x] = nd * (f2(double(x + 1) / nd) - f2(double(x) / nd));
  }

  std::vector<double> integrand(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& cfg = traj.states[i];
    const auto g1 = f1.shifted(frame_offset(c, traj.times[i]));
    double s = 0.0;
    double prev = g1(0.0);
    for (std::size_t x = 0; x < n; ++x) {
      const double next = g1(double(x + 1) / nd);
      const double grad1 = nd * (next - prev);
      prev = next;
      const double e0 = cfg[x];
      const double e1 = cfg[(x + 1) % n];
      const double dxi = std::exp(-params.b * e1) - std::exp(-params.b * e0);
      const double term = grad1 * dxi + grad2[x] * (e1 - e0);
      s += term * term;
    }
    integrand[i] = pref * s;
  }
  double qv = 0.0;
  for (std::size_t i = 1; i < integrand.size(); ++i) {
    qv += 0.5 * (integrand[i] + integrand[i - 1]) * (traj.times[i] - traj.times[i - 1]);
  }
  return qv;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,x,eta\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const std::string t = format_double(traj.times[i]);
    for (std::size_t x = 0; x < traj.states[i].size(); ++x) {
      out << t << ',' << x << ',' << format_double(traj.states[i][x]) << '\n';
    }
  }
}

}  // namespace fluctlab
