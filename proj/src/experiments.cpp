#include "fluctlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/ensemble.hpp"
#include "fluctlab/equilibrium.hpp"
#include "fluctlab/fields.hpp"
#include "fluctlab/io.hpp"
#include "fluctlab/spde.hpp"

namespace fluctlab {

using nlohmann::json;

const char* version() { return FLUCTLAB_VERSION; }

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Tolerance of the closed-form moments against quadrature.
constexpr double kClosedFormRel = 1e-8;
// Admissible growth of the bound ratios over a grid, relative to the reference cell.
constexpr double kRatioSpread = 4.0;
// Static oracle samples per dynamic replica in bg_test.
constexpr std::size_t kStaticFactor = 10;
// Window t - s of the energy estimate.
constexpr double kEnergyWindow = 0.5;

// Replica r of sub-ensemble `block`.
Rng replica_rng(std::uint64_t seed, std::uint64_t block, std::size_t r) {
  return Rng(seed, (block << 40) + r);
}

std::string fmt(double v) { return format_double(v); }

std::string h(int z) { return "h_" + std::to_string(z); }

Report informational(Report r, std::string note = "informational") {
  r.pass.reset();
  r.kind = "informational";
  if (r.note.empty()) r.note = std::move(note);
  return r;
}

Report exact_check(std::string quantity, double empirical, double predicted, bool pass,
                   std::string note = "") {
  Report r;
  r.quantity = std::move(quantity);
  r.empirical = empirical;
  r.predicted = predicted;
  r.pass = pass;
  r.kind = "exact";
  r.note = std::move(note);
  return r;
}

// Gate on value <= bound; no se.
Report bound_check(std::string quantity, double value, double bound, std::string note) {
  Report r;
  r.quantity = std::move(quantity);
  r.empirical = value;
  r.predicted = bound;
  if (std::isfinite(value)) r.pass = value <= bound;
  r.note = std::move(note);
  return r;
}

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double xi_sum(const Configuration& c, double b) { return sorted_sum(xi_of(c, b)); }

double rel_drift(double before, double after) {
  return std::abs(after - before) / std::max(std::abs(before), 1e-300);
}

std::vector<int> positive_modes(const std::vector<int>& modes) {
  std::vector<int> out;
  for (int z : modes) {
    if (z != 0 && std::find(out.begin(), out.end(), std::abs(z)) == out.end()) out.push_back(std::abs(z));
  }
  if (out.empty()) throw std::invalid_argument("need at least one nonzero mode");
  return out;
}

std::vector<int> signed_modes(const std::vector<int>& zs) {
  std::vector<int> out;
  for (int z : zs) {
    out.push_back(z);
    out.push_back(-z);
  }
  return out;
}

std::vector<double> sorted_lags(const RunConfig& c, std::vector<double> fallback) {
  std::vector<double> lags = c.lags.empty() ? std::move(fallback) : c.lags;
  std::sort(lags.begin(), lags.end());
  lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
  return lags;
}

Eigen::Matrix2d rotation(double phi) {
  Eigen::Matrix2d R;
  R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return R;
}

// ---------------------------------------------------------------- moments

ExperimentResult run_moments(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments closed = moments(p);
  const Moments quad = moments_by_quadrature(p);
  const auto configs = run_replicas<Configuration>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 0, r);
    Configuration cfg;
    sample_gibbs_into(p, rng, cfg);
    return cfg;
  });
  std::vector<double> xi, eta, en;
  for (const auto& cfg : configs) {
    for (double x : cfg.eta()) {
      eta.push_back(x);
      xi.push_back(std::exp(-p.b * x));
      en.push_back(potential(p.b, x));
    }
  }
  ExperimentResult out;
  out.reports.push_back(compare_se("rho", mean_of(xi), closed.rho));
  out.reports.push_back(compare_se("tau2", variance_of(xi), closed.tau2));
  out.reports.push_back(compare_se("v", mean_of(eta), quad.v));
  out.reports.push_back(compare_se("sigma2", variance_of(eta), quad.sigma2));
  out.reports.push_back(compare_se("delta", covariance_of(eta, xi), quad.delta));
  out.reports.push_back(compare_se("e", mean_of(en), quad.e));
  const std::pair<const char*, std::pair<double, double>> forms[] = {
      {"v", {closed.v, quad.v}},
      {"sigma2", {closed.sigma2, quad.sigma2}},
      {"delta", {closed.delta, quad.delta}},
      {"e", {closed.e, quad.e}}};
  for (const auto& [name, vals] : forms) {
    const bool ok = std::abs(vals.first - vals.second) <= kClosedFormRel * std::max(1.0, std::abs(vals.second));
    out.reports.push_back(exact_check(std::string("closed form ") + name, vals.first, vals.second, ok,
                                      "against adaptive quadrature"));
  }
  std::ostringstream csv;
  csv << "quantity,empirical,predicted,se\n";
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& r = out.reports[i];
    csv << r.quantity << ',' << fmt(r.empirical) << ',' << fmt(r.predicted) << ','
        << (r.se ? fmt(*r.se) : "") << '\n';
  }
  out.files.emplace_back("moments.csv", csv.str());
  out.notes.push_back("pooled " + std::to_string(xi.size()) + " site samples");
  return out;
}

// ---------------------------------------------------------- stationarity

ExperimentResult run_stationarity(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments m = moments(p);
  const IntegratorSpec spec = c.resolved_integrator();
  struct Out {
    double s0[4] = {}, sT[4] = {};
    double drift_xi = 0, drift_energy = 0;
    Configuration c0, cT;
  };
  auto site_stats = [&](const Configuration& cfg, double* s) {
    const double n = double(cfg.size());
    for (std::size_t x = 0; x < cfg.size(); ++x) {
      const double xi = std::exp(-p.b * cfg[x]);
      s[0] += xi / n;
      s[1] += (xi - m.rho) * (xi - m.rho) / n;
      s[2] += cfg[x] / n;
      s[3] += (cfg[x] - m.v) * (cfg[x] - m.v) / n;
    }
  };
  const auto outs = run_replicas<Out>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 0, r);
    Out o;
    sample_gibbs_into(p, rng, o.c0);
    LatticeIntegrator integ(o.c0, p, spec);
    integ.advance(c.T, rng);
    o.cT = integ.configuration();
    site_stats(o.c0, o.s0);
    site_stats(o.cT, o.sT);
    o.drift_xi = rel_drift(xi_sum(o.c0, p.b), xi_sum(o.cT, p.b));
    o.drift_energy = rel_drift(conserved(o.c0, p).energy, conserved(o.cT, p).energy);
    if (r != 0) o.c0 = o.cT = Configuration();
    return o;
  });
  ExperimentResult out;
  const char* names[4] = {"rho", "tau2", "v", "sigma2"};
  const double pred[4] = {m.rho, m.tau2, m.v, m.sigma2};
  for (int k = 0; k < 4; ++k) {
    std::vector<double> at0, atT;
    for (const auto& o : outs) {
      at0.push_back(o.s0[k]);
      atT.push_back(o.sT[k]);
    }
    out.reports.push_back(informational(compare_se(std::string(names[k]) + "(0)", mean_of(at0), pred[k])));
    out.reports.push_back(compare_se(std::string(names[k]) + "(T)", mean_of(atT), pred[k]));
  }
  double dxi = 0, den = 0;
  for (const auto& o : outs) {
    dxi = std::max(dxi, o.drift_xi);
    den = std::max(den, o.drift_energy);
  }
  out.reports.push_back(exact_check("max relative drift of sum xi", dxi, 0.0, dxi <= 1e-8, "bound 1e-8"));
  out.reports.push_back(exact_check("max relative drift of sum V_b(eta)", den, 0.0, den <= 1e-8, "bound 1e-8"));

  Trajectory tr;
  tr.times = {0.0, c.T};
  tr.states = {outs[0].c0, outs[0].cT};
  std::ostringstream snaps;
  write_trajectory_csv(snaps, tr);
  out.files.emplace_back("snapshots.csv", snaps.str());
  std::vector<FieldSample> fs{sample_fields(outs[0].c0, 0.0, c.modes, p),
                              sample_fields(outs[0].cT, c.T, c.modes, p)};
  std::ostringstream fields;
  write_field_csv(fields, fs);
  out.files.emplace_back("fields.csv", fields.str());
  out.notes.push_back("site statistics are replica means of per-site averages centered at the exact rho and v");
  return out;
}

// -------------------------------------------------------------- qv_limits

ExperimentResult run_qv_limits(const RunConfig& c) {
  const ModelParams& p = c.model;
  const IntegratorSpec spec = c.resolved_integrator();
  const int z = positive_modes(c.modes).front();
  const TestFunction f = TestFunction::mode(z);
  const auto times = uniform_times(c.T, c.snapshot_count);
  struct Out {
    double qv = 0;
    std::vector<double> N;
  };
  const auto outs = run_replicas<Out>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 0, r);
    Configuration cfg;
    sample_gibbs_into(p, rng, cfg);
    const Trajectory traj = evolve(cfg, p, spec, c.T, times, rng);
    return Out{realized_qv(traj, p, f, f), martingale_residual(traj, p, f, f)};
  });
  std::vector<double> qv, nT, iso;
  for (const auto& o : outs) {
    qv.push_back(o.qv);
    nT.push_back(o.N.back());
    iso.push_back(o.N.back() * o.N.back() - o.qv);
  }
  ExperimentResult out;
  const std::string fs = "(" + h(z) + "," + h(z) + ")";
  Report q = compare_relative("mean realized QV " + fs, mean_of(qv), qv_prediction(p, f, f, c.T), 0.05);
  q.note = "within 5%";
  out.reports.push_back(q);
  out.reports.push_back(compare_se("mean N_T " + fs, mean_of(nT), 0.0));
  out.reports.push_back(compare_se("E[N_T^2 - QV_T] " + fs, mean_of(iso), 0.0));

  std::ostringstream csv;
  csv << "t,mean_N,mean_N2\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    double s = 0, s2 = 0;
    for (const auto& o : outs) {
      s += o.N[i];
      s2 += o.N[i] * o.N[i];
    }
    const double R = double(outs.size());
    csv << fmt(times[i]) << ',' << fmt(s / R) << ',' << fmt(s2 / R) << '\n';
  }
  out.files.emplace_back("qv_series.csv", csv.str());
  return out;
}

// ------------------------------------------------ two-time field covariances

// Y and V projections on +-z at the grid times k g, k = 0..K.
struct FieldPath {
  std::vector<std::vector<double>> y, v;  // [time][mode index]
};

struct TimeGrid {
  double g = 0;
  int K = 0;
  std::vector<int> lag_steps;
};

TimeGrid make_grid(double T, const std::vector<double>& lags) {
  TimeGrid grid;
  for (double l : lags) {
    if (l > 0) {
      grid.g = l;
      break;
    }
  }
  if (!(grid.g > 0)) throw std::invalid_argument("need a positive lag");
  grid.K = static_cast<int>(std::llround(T / grid.g));
  if (std::abs(grid.K * grid.g - T) > 1e-9 * T) {
    throw std::invalid_argument("T must be a multiple of the smallest lag");
  }
  for (double l : lags) {
    const int m = static_cast<int>(std::llround(l / grid.g));
    if (std::abs(m * grid.g - l) > 1e-9 * grid.g) {
      throw std::invalid_argument("lags must be multiples of the smallest positive lag");
    }
    if (m > grid.K) throw std::invalid_argument("lags must not exceed T");
    grid.lag_steps.push_back(m);
  }
  return grid;
}

std::vector<FieldPath> sample_field_paths(const RunConfig& c, const ModeProjector& proj,
                                          const TimeGrid& grid) {
  const ModelParams& p = c.model;
  const IntegratorSpec spec = c.resolved_integrator();
  return run_replicas<FieldPath>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 0, r);
    Configuration cfg;
    sample_gibbs_into(p, rng, cfg);
    LatticeIntegrator integ(cfg, p, spec);
    FieldPath fp;
    for (int k = 0; k <= grid.K; ++k) {
      if (k > 0) integ.advance(grid.g, rng);
      const double t = k * grid.g;
      fp.y.push_back(proj.project_Y(integ.xi(), t));
      fp.v.push_back(proj.project_V(integ.xi()));
    }
    return fp;
  });
}

ExperimentResult run_ou_regime(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments m = moments(p);
  const auto zs = positive_modes(c.modes);
  const auto lags = sorted_lags(c, {0.005, 0.01, 0.02});
  const TimeGrid grid = make_grid(c.T, lags);
  const ModeProjector proj(p, signed_modes(zs));
  const auto paths = sample_field_paths(c, proj, grid);

  Eigen::Matrix2d D;
  D << m.tau2, m.delta, m.delta, m.sigma2;
  const OUParams ou{p.gamma * Eigen::MatrixXd::Identity(2, 2), p.gamma * Eigen::MatrixXd(D)};
  const char* names[2] = {"Y", "V"};
  ExperimentResult out;
  std::ostringstream csv;
  csv << "lag,z,i,j,empirical,predicted,se\n";
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const int ms = grid.lag_steps[li];
    for (int z : zs) {
      const Eigen::MatrixXd pred = ou_mode_covariance(ou, z, lags[li]);
      const int ip = proj.mode_index(z), in = proj.mode_index(-z);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          std::vector<double> per;
          for (const auto& fp : paths) {
            const auto& A = i == 0 ? fp.y : fp.v;
            const auto& B = j == 0 ? fp.y : fp.v;
            double s = 0;
            int cnt = 0;
            for (int o = 0; o + ms <= grid.K; ++o) {
              for (int idx : {ip, in}) {
                s += A[std::size_t(o + ms)][std::size_t(idx)] * B[std::size_t(o)][std::size_t(idx)];
                ++cnt;
              }
            }
            per.push_back(s / cnt);
          }
          const std::string q = std::string("E[") + names[i] + "_t(h_" + std::to_string(z) + ") " +
                                names[j] + "_s(h_" + std::to_string(z) + ")] lag=" + fmt(lags[li]);
          Report r = compare_se(q, mean_of(per), pred(i, j));
          csv << fmt(lags[li]) << ',' << z << ',' << names[i] << ',' << names[j] << ','
              << fmt(r.empirical) << ',' << fmt(r.predicted) << ',' << (r.se ? fmt(*r.se) : "") << '\n';
          out.reports.push_back(std::move(r));
        }
      }
    }
  }
  out.files.emplace_back("covariance.csv", csv.str());
  out.notes.push_back("covariances averaged over origins spaced by the smallest lag and over h_z, h_-z");
  return out;
}

ExperimentResult run_drifted_ou_regime(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments m = moments(p);
  const auto zs = positive_modes(c.modes);
  const auto lags = sorted_lags(c, {0.005, 0.01, 0.02});
  const TimeGrid grid = make_grid(c.T, lags);
  const ModeProjector proj(p, signed_modes(zs));
  const auto paths = sample_field_paths(c, proj, grid);

  DriftedOUParams dp;
  dp.lam = dp.mu = p.gamma;
  dp.theta = -2.0 * p.alpha * p.b;
  dp.c = cn(p);
  dp.a_ = 2.0 * p.gamma * m.tau2;
  dp.b_ = 2.0 * p.gamma * m.delta;
  dp.d_ = 2.0 * p.gamma * m.sigma2;

  ExperimentResult out;
  std::ostringstream csv;
  csv << "lag,z,block,component,empirical,predicted,se\n";
  const char* blocks[4] = {"YY", "YV", "VY", "VV"};
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const int ms = grid.lag_steps[li];
    const double lag = lags[li];
    for (int z : zs) {
      const double k = kTwoPi * z;
      const int ip = proj.mode_index(z), in = proj.mode_index(-z);
      // predicted E[r_{s+lag} r_s^T], averaged over origins
      Eigen::Matrix4d pred = Eigen::Matrix4d::Zero();
      int origins = 0;
      for (int o = 0; o + ms <= grid.K; ++o, ++origins) {
        const double s = o * grid.g;
        const Eigen::Matrix2d R = rotation(k * dp.c * s);
        Eigen::Matrix4d S;
        S.topLeftCorner<2, 2>() = m.tau2 * Eigen::Matrix2d::Identity();
        S.bottomRightCorner<2, 2>() = m.sigma2 * Eigen::Matrix2d::Identity();
        S.topRightCorner<2, 2>() = m.delta * R.transpose();
        S.bottomLeftCorner<2, 2>() = m.delta * R;
        pred += drifted_ou_propagator(dp, z, s, s + lag, 32) * S;
      }
      pred /= origins;
      for (int bi = 0; bi < 2; ++bi) {
        for (int bj = 0; bj < 2; ++bj) {
          // blocks commute with rotations: a I + b J
          std::vector<double> pa, pb;
          for (const auto& fp : paths) {
            const auto& A = bi == 0 ? fp.y : fp.v;
            const auto& B = bj == 0 ? fp.y : fp.v;
            double sa = 0, sb = 0;
            for (int o = 0; o + ms <= grid.K; ++o) {
              const auto& at = A[std::size_t(o + ms)];
              const auto& bs = B[std::size_t(o)];
              sa += 0.5 * (at[std::size_t(ip)] * bs[std::size_t(ip)] + at[std::size_t(in)] * bs[std::size_t(in)]);
              sb += 0.5 * (at[std::size_t(in)] * bs[std::size_t(ip)] - at[std::size_t(ip)] * bs[std::size_t(in)]);
            }
            pa.push_back(sa / origins);
            pb.push_back(sb / origins);
          }
          const auto blk = pred.block<2, 2>(2 * bi, 2 * bj);
          const double a_pred = 0.5 * (blk(0, 0) + blk(1, 1));
          const double b_pred = 0.5 * (blk(1, 0) - blk(0, 1));
          const std::string base = std::string(blocks[2 * bi + bj]) + " z=" + std::to_string(z) +
                                   " lag=" + fmt(lag);
          for (int comp = 0; comp < 2; ++comp) {
            Report r = compare_se(base + (comp == 0 ? " symmetric" : " antisymmetric"),
                                  mean_of(comp == 0 ? pa : pb), comp == 0 ? a_pred : b_pred);
            csv << fmt(lag) << ',' << z << ',' << blocks[2 * bi + bj] << ','
                << (comp == 0 ? "symmetric" : "antisymmetric") << ',' << fmt(r.empirical) << ','
                << fmt(r.predicted) << ',' << (r.se ? fmt(*r.se) : "") << '\n';
            out.reports.push_back(std::move(r));
          }
        }
      }
    }
  }
  out.files.emplace_back("covariance.csv", csv.str());
  out.notes.push_back("drifted OU with lambda = mu = gamma, theta = -2 alpha b, c = 2 b^2 rho alpha");
  return out;
}

// -------------------------------------------------------- transport_regime

ExperimentResult run_transport_regime(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments m = moments(p);
  const IntegratorSpec spec = c.resolved_integrator();
  const auto zs = positive_modes(c.modes);
  const auto sm = signed_modes(zs);
  const ModeProjector proj(p, sm);
  struct Out {
    std::vector<double> y0, v0, yT, vT;
  };
  const auto outs = run_replicas<Out>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 0, r);
    Configuration cfg;
    sample_gibbs_into(p, rng, cfg);
    LatticeIntegrator integ(cfg, p, spec);
    Out o;
    o.y0 = proj.project_Y(integ.xi(), 0.0);
    o.v0 = proj.project_V(integ.xi());
    integ.advance(c.T, rng);
    o.yT = proj.project_Y(integ.xi(), c.T);
    o.vT = proj.project_V(integ.xi());
    return o;
  });

  const double theta = 2.0 * p.alpha * p.b;
  const double speed = cn(p);
  ExperimentResult out;
  std::ostringstream csv;
  csv << "z,f,g,empirical,predicted,se,gated\n";
  for (int z : zs) {
    for (int fz : {z, -z}) {
      for (int gz : {z, -z}) {
        SpectralState init(z, 2);
        init.set_basis_values(0, z, gz > 0 ? m.tau2 : 0.0, gz < 0 ? m.tau2 : 0.0);
        const double pred = transport_solve(init, theta, speed, c.T, TestFunction::mode(fz)).second;
        const auto fi = std::size_t(proj.mode_index(fz)), gi = std::size_t(proj.mode_index(gz));
        std::vector<double> per;
        for (const auto& o : outs) per.push_back((o.vT[fi] - o.v0[fi]) * o.y0[gi]);
        Report r = compare_se("E[(V_T - V_0)(" + h(fz) + ") Y_0(" + h(gz) + ")]", mean_of(per), pred);
        const bool gated = fz != gz;
        if (!gated) r = informational(std::move(r), "informational: same-mode pairing carries O(t n^-1/2) diffusion");
        csv << z << ',' << h(fz) << ',' << h(gz) << ',' << fmt(r.empirical) << ',' << fmt(r.predicted)
            << ',' << (r.se ? fmt(*r.se) : "") << ',' << (gated ? 1 : 0) << '\n';
        // Both fields also diffuse at rate lam = gamma n^{a-2} k^2, which only
        // vanishes like n^{a-2}. Damping the transport term and V_0 gives
        // e^{-lam T} pred + (e^{-lam T} - 1) delta <h_f, h_g>.
        const double k = kTwoPi * z;
        const double damp = std::exp(-p.gamma * std::pow(double(p.n), p.a - 2.0) * k * k * c.T);
        const double finite_n = damp * pred + (fz == gz ? (damp - 1.0) * m.delta : 0.0);
        Report fr = compare_se(r.quantity + " with finite-n diffusion", mean_of(per), finite_n);
        out.reports.push_back(std::move(r));
        out.reports.push_back(informational(std::move(fr), "informational: includes the O(n^(a-2)) exchange diffusion"));
      }
    }
  }
  for (int z : zs) {
    const double k = kTwoPi * z;
    const double diffusive = 2.0 * p.gamma * m.tau2 * k * k * c.T * std::pow(double(p.n), p.a - 2.0);
    for (int hz : {z, -z}) {
      const auto i = std::size_t(proj.mode_index(hz));
      std::vector<double> dy;
      for (const auto& o : outs) dy.push_back(o.yT[i] - o.y0[i]);
      const Estimate var = variance_of(dy);
      Report r = compare_se("Var[Y_T(" + h(hz) + ") - Y_0(" + h(hz) + ")]", var, 0.0);
      r.note = "frozen Y field";
      out.reports.push_back(std::move(r));
      Report scale;
      scale.quantity = "Var[Y_T(" + h(hz) + ") - Y_0(" + h(hz) + ")] / (2 gamma tau2 k^2 T n^(a-2))";
      scale.empirical = var.value / diffusive;
      scale.predicted = 1.0;
      out.reports.push_back(informational(std::move(scale), "informational: finite-n diffusive increment"));
    }
  }
  out.files.emplace_back("transport.csv", csv.str());
  out.notes.push_back("transport prediction uses theta = 2 alpha b in the displayed relation, equivalently -2 alpha b in the drifted OU sign convention");
  return out;
}

// ------------------------------------------------------------ sbe_regime

ExperimentResult run_sbe_regime(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments m = moments(p);
  const int z = positive_modes(c.modes).front();
  const TestFunction f = TestFunction::mode(z);
  ExperimentResult out;

  // (a) the quadratic drift term of the Y decomposition
  auto quad_values = [&](const ModelParams& q, std::uint64_t block) {
    const IntegratorSpec spec = IntegratorSpec::defaults(q);
    return run_replicas<double>(c.ensemble_size, c.workers, [&](std::size_t r) {
      Rng rng = replica_rng(c.seed, block, r);
      Configuration cfg;
      sample_gibbs_into(q, rng, cfg);
      return quadratic_term(cfg, q, spec, f, c.T, rng);
    });
  };
  ModelParams p1 = p;
  p1.kappa = 1.0;
  const Estimate var_k = variance_of(quad_values(p, 1));
  const Estimate var_1 = variance_of(quad_values(p1, 2));
  {
    Report r;
    r.quantity = "Var quadratic term, kappa=" + fmt(p.kappa);
    r.empirical = var_k.value;
    r.predicted = 0.0;
    if (std::isfinite(var_k.se)) {
      r.se = var_k.se;
      if (var_k.se > 0) r.z_score = var_k.value / var_k.se;
      r.pass = var_k.value > 5.0 * var_k.se;
    }
    r.note = "non-vanishing: variance > 5 se";
    out.reports.push_back(std::move(r));
  }
  {
    Report r;
    r.quantity = "Var quadratic term, kappa=1 / kappa=" + fmt(p.kappa);
    r.empirical = var_1.value / var_k.value;
    r.predicted = 0.05;
    if (std::isfinite(var_1.se) && std::isfinite(var_k.se)) r.pass = r.empirical <= 0.05;
    r.note = "vanishing at kappa = 1: ratio <= 0.05";
    out.reports.push_back(std::move(r));
  }

  // (b) energy estimate of the Burgers solver
  const double A = p.gamma, B = p.b * p.b * p.alpha, C = p.gamma * m.tau2;
  std::vector<double> eps = c.eps.empty() ? std::vector<double>{0.2, 0.1, 0.05} : c.eps;
  std::sort(eps.rbegin(), eps.rend());
  std::vector<double> all;
  for (double e : eps) {
    all.push_back(e);
    all.push_back(0.5 * e);
  }
  const double dt0 = sbe_default_dt(c.z_max, A, B, C);
  const long steps = std::max(1L, static_cast<long>(std::ceil(kEnergyWindow / dt0)));
  const double dt = kEnergyWindow / double(steps);
  const OUParams ou{Eigen::MatrixXd::Constant(1, 1, A), Eigen::MatrixXd::Constant(1, 1, C)};
  const auto qs = run_replicas<std::vector<double>>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 3, r);
    SpectralState s = ou_sample_stationary(ou, c.z_max, rng);
    SbeStepper stepper(c.z_max, A, B, C, dt);
    QuadraticFunctional q(c.z_max, f, all);
    q.add(s);
    for (long i = 0; i < steps; ++i) {
      stepper.step(s, rng);
      q.add(s);
    }
    return q.values();
  });
  std::ostringstream csv;
  csv << "eps1,eps2,energy,energy_se,ratio\n";
  std::vector<double> ratios;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    std::vector<double> d2;
    for (const auto& v : qs) {
      const double d = v[2 * e] - v[2 * e + 1];
      d2.push_back(d * d);
    }
    const Estimate en = mean_of(d2);
    const double ratio = en.value / (eps[e] * kEnergyWindow);
    ratios.push_back(ratio);
    Report r;
    r.quantity = "E[(Q^eps - Q^eps/2)^2] / (eps (t - s)), eps=" + fmt(eps[e]);
    r.empirical = ratio;
    r.predicted = 0.0;
    if (std::isfinite(en.se)) r.se = en.se / (eps[e] * kEnergyWindow);
    out.reports.push_back(informational(std::move(r), "informational: kappa_energy estimate"));
    csv << fmt(eps[e]) << ',' << fmt(0.5 * eps[e]) << ',' << fmt(en.value) << ','
        << (std::isfinite(en.se) ? fmt(en.se) : "") << ',' << fmt(ratio) << '\n';
  }
  const double spread = *std::max_element(ratios.begin(), ratios.end()) / ratios.front();
  Report b = bound_check("max energy ratio / ratio at eps=" + fmt(eps.front()), spread, kRatioSpread,
                         "uniform bound over eps");
  if (c.ensemble_size < 2) b.pass.reset();
  out.reports.push_back(std::move(b));
  out.files.emplace_back("energy.csv", csv.str());
  out.notes.push_back("Burgers solver with A = gamma, B = b^2 alpha, C = gamma tau^2, z_max = " +
                      std::to_string(c.z_max) + ", dt = " + fmt(dt));
  return out;
}

// --------------------------------------------------------------- bg_test

ExperimentResult run_bg_test(const RunConfig& c) {
  const std::vector<int> sizes = c.sizes.empty() ? std::vector<int>{64, 128} : c.sizes;
  std::vector<double> eps = c.eps.empty() ? std::vector<double>{0.05, 0.1, 0.2} : c.eps;
  const int z = positive_modes(c.modes).front();
  const TestFunction psi = TestFunction::mode(z);
  const auto times = uniform_times(c.T, c.snapshot_count);
  ExperimentResult out;
  std::ostringstream csv;
  csv << "eps,n,lhs,lhs_se,rhs_shape,ratio\n";
  struct Cell {
    double eps;
    int n;
    double ratio;
  };
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    ModelParams p = c.model;
    p.n = sizes[k];
    p.validate();
    const IntegratorSpec spec = c.integrator.dt > 0 ? c.integrator : IntegratorSpec::defaults(p);
    const auto ints = run_replicas<std::vector<double>>(c.ensemble_size, c.workers, [&](std::size_t r) {
      Rng rng = replica_rng(c.seed, k, r);
      Configuration cfg;
      sample_gibbs_into(p, rng, cfg);
      return bg_time_integrals(cfg, p, spec, psi, eps, c.T, rng);
    });
    for (std::size_t e = 0; e < eps.size(); ++e) {
      std::vector<double> sq;
      for (const auto& v : ints) sq.push_back(v[e] * v[e]);
      const Estimate lhs = mean_of(sq);
      const double rhs = bg_rhs_shape(p, psi, eps[e], c.T);
      cells.push_back({eps[e], p.n, lhs.value / rhs});
      Report r;
      r.quantity = "lhs / rhs_shape, eps=" + fmt(eps[e]) + " n=" + std::to_string(p.n);
      r.empirical = lhs.value / rhs;
      r.predicted = 0.0;
      if (std::isfinite(lhs.se)) r.se = lhs.se / rhs;
      out.reports.push_back(informational(std::move(r)));
      csv << fmt(eps[e]) << ',' << p.n << ',' << fmt(lhs.value) << ','
          << (std::isfinite(lhs.se) ? fmt(lhs.se) : "") << ',' << fmt(rhs) << ',' << fmt(lhs.value / rhs)
          << '\n';
    }
  }
  // reference cell: largest eps at the smallest n
  const double eps_ref = *std::max_element(eps.begin(), eps.end());
  const int n_ref = *std::min_element(sizes.begin(), sizes.end());
  double ref = 0, worst = 0;
  for (const auto& cell : cells) {
    if (cell.eps == eps_ref && cell.n == n_ref) ref = cell.ratio;
    worst = std::max(worst, cell.ratio);
  }
  Report b = bound_check("max lhs/rhs_shape over grid / value at eps=" + fmt(eps_ref) + " n=" +
                             std::to_string(n_ref),
                         worst / ref, kRatioSpread, "single constant K over the grid");
  if (c.ensemble_size < 2) b.pass.reset();
  out.reports.push_back(std::move(b));

  // static oracle: gamma = alpha = 0 freezes the configuration
  ModelParams ps = c.model;
  ps.n = n_ref;
  ps.gamma = 0.0;
  ps.alpha = 0.0;
  const IntegratorSpec sspec = IntegratorSpec::defaults(ps);
  // static samples are cheap; the fourth-moment tails need many of them
  const std::size_t static_count = c.ensemble_size < 2 ? c.ensemble_size : kStaticFactor * c.ensemble_size;
  const auto sints = run_replicas<std::vector<double>>(static_count, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 1000, r);
    Configuration cfg;
    sample_gibbs_into(ps, rng, cfg);
    const Trajectory traj = evolve(cfg, ps, sspec, c.T, times, rng);
    std::vector<double> v;
    for (double e : eps) v.push_back(bg_time_integral(traj, ps, psi, e, c.T));
    return v;
  });
  for (std::size_t e = 0; e < eps.size(); ++e) {
    std::vector<double> sq;
    for (const auto& v : sints) sq.push_back(v[e] * v[e]);
    const double exact = c.T * c.T * bg_static_moment(ps, psi, eps[e]);
    out.reports.push_back(compare_se("static lhs, eps=" + fmt(eps[e]) + " n=" + std::to_string(n_ref),
                                     mean_of(sq), exact));
  }
  out.files.emplace_back("bg_grid.csv", csv.str());
  out.notes.push_back("static oracle from " + std::to_string(static_count) + " frozen configurations");
  return out;
}

// ----------------------------------------------------------- scaling_fit

ExperimentResult run_scaling_fit(const RunConfig& c) {
  const std::vector<int> sizes = c.sizes.empty() ? std::vector<int>{64, 128, 256} : c.sizes;
  const int z = positive_modes(c.modes).front();
  const TestFunction f = TestFunction::mode(z);
  const ModelParams& p = c.model;
  ExperimentResult out;
  const double sharp = 1.0 - 2.0 * p.kappa;
  const double crude = 2.0 - 2.0 * p.kappa;
  std::ostringstream csv;
  csv << "n,log_n,variance,variance_se,log_variance\n";
  try {
    const ScalingResult res = h_minus_one_scaling(p, sizes, f, c.T, c.ensemble_size, c.seed, c.workers);
    for (const auto& pt : res.points) {
      csv << pt.n << ',' << fmt(std::log(double(pt.n))) << ',' << fmt(pt.variance.value) << ','
          << (std::isfinite(pt.variance.se) ? fmt(pt.variance.se) : "") << ','
          << fmt(std::log(pt.variance.value)) << '\n';
    }
    const Estimate slope{res.fit.slope, res.fit.slope_se};
    out.reports.push_back(compare_se("slope vs 1 - 2 kappa", slope, sharp));
    Report sep;
    sep.quantity = "slope separation from 2 - 2 kappa (in slope_se)";
    sep.empirical = std::abs(res.fit.slope - crude) / res.fit.slope_se;
    sep.predicted = 3.0;
    sep.se = res.fit.slope_se;
    sep.pass = sep.empirical >= 3.0;
    sep.note = "must be >= 3";
    out.reports.push_back(std::move(sep));
  } catch (const std::invalid_argument& e) {
    Report r;
    r.quantity = "slope vs 1 - 2 kappa";
    r.empirical = 0.0;
    r.predicted = sharp;
    if (c.ensemble_size >= 2) r.pass = false;
    r.note = std::string("fit rejected: ") + e.what();
    out.reports.push_back(std::move(r));
    out.notes.push_back("zero or undefined variance; the log-log fit was rejected");
  }
  out.files.emplace_back("scaling.csv", csv.str());

  std::ostringstream grid;
  grid << "kappa,a,z_regime,y_regime\n";
  for (int i = 0; i <= 8; ++i) {
    for (int j = 0; j <= 8; ++j) {
      const double kappa = 0.25 * i;
      const double a = 1.0 + 0.125 * j;
      grid << fmt(kappa) << ',' << fmt(a) << ',' << z_regime(kappa, a) << ',' << y_regime(kappa, a) << '\n';
    }
  }
  out.files.emplace_back("phase_grid.csv", grid.str());
  return out;
}

// -------------------------------------------------------------- spde_only

ExperimentResult run_spde_only(const RunConfig& c) {
  const ModelParams& p = c.model;
  const Moments m = moments(p);
  ExperimentResult out;

  // Lyapunov residuals
  Eigen::Matrix2d D0;
  D0 << m.tau2, m.delta, m.delta, m.sigma2;
  Eigen::Matrix2d A2, C2;
  A2 << 2.0, 0.5, 0.5, 1.0;
  C2 << 1.0, 0.3, 0.3, 0.5;
  const std::pair<Eigen::MatrixXd, Eigen::MatrixXd> systems[] = {
      {p.gamma * Eigen::MatrixXd::Identity(2, 2), p.gamma * Eigen::MatrixXd(D0)}, {A2, C2}};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& [A, C] = systems[i];
    const Eigen::MatrixXd D = lyapunov_solve(A, C);
    const double res = (A * D + D * A.transpose() - 2.0 * C).cwiseAbs().maxCoeff();
    out.reports.push_back(exact_check("Lyapunov residual, system " + std::to_string(i + 1), res, 0.0,
                                      res <= 1e-12, "bound 1e-12"));
  }

  // OU mode autocorrelation
  const double A = p.gamma, B = p.b * p.b * p.alpha, C = p.gamma * m.tau2;
  const OUParams ou{Eigen::MatrixXd::Constant(1, 1, A), Eigen::MatrixXd::Constant(1, 1, C)};
  const auto zs = positive_modes(c.modes);
  for (int z : zs) {
    if (z > c.z_max) throw std::invalid_argument("modes must not exceed z_max");
  }
  const auto lags = sorted_lags(c, {0.005, 0.01, 0.02});
  const auto corr = run_replicas<std::vector<double>>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 0, r);
    const SpectralState s0 = ou_sample_stationary(ou, c.z_max, rng);
    SpectralState s = s0;
    double prev = 0.0;
    std::vector<double> v;
    for (double l : lags) {
      s = ou_step(s, ou, l - prev, rng);
      prev = l;
      for (int z : zs) {
        v.push_back(0.5 * (s.basis_value(0, z) * s0.basis_value(0, z) + s.basis_value(0, -z) * s0.basis_value(0, -z)) / (C / A));
      }
    }
    return v;
  });
  std::ostringstream acsv;
  acsv << "lag,z,empirical,predicted,se\n";
  for (std::size_t li = 0; li < lags.size(); ++li) {
    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
      std::vector<double> col;
      for (const auto& v : corr) col.push_back(v[li * zs.size() + zi]);
      const double k = kTwoPi * zs[zi];
      Report r = compare_se("OU autocorrelation " + h(zs[zi]) + " lag=" + fmt(lags[li]), mean_of(col),
                            std::exp(-A * k * k * lags[li]));
      acsv << fmt(lags[li]) << ',' << zs[zi] << ',' << fmt(r.empirical) << ',' << fmt(r.predicted) << ','
           << (r.se ? fmt(*r.se) : "") << '\n';
      out.reports.push_back(std::move(r));
    }
  }
  out.files.emplace_back("ou_autocorrelation.csv", acsv.str());

  // stationary mode variance of the Burgers solver
  std::vector<int> vz;
  for (int z = 1; z <= c.z_max; z *= 2) vz.push_back(z);
  if (vz.back() != c.z_max) vz.push_back(c.z_max);
  const double dt0 = sbe_default_dt(c.z_max, A, B, C);
  const long steps = std::max(1L, static_cast<long>(std::ceil(c.T / dt0)));
  const double dt = c.T / double(steps);
  const auto vars = run_replicas<std::vector<double>>(c.ensemble_size, c.workers, [&](std::size_t r) {
    Rng rng = replica_rng(c.seed, 1, r);
    SpectralState s = ou_sample_stationary(ou, c.z_max, rng);
    SbeStepper stepper(c.z_max, A, B, C, dt);
    std::vector<double> acc(vz.size(), 0.0);
    for (long i = 0; i < steps; ++i) {
      stepper.step(s, rng);
      for (std::size_t k = 0; k < vz.size(); ++k) {
        const double a = s.basis_value(0, vz[k]), b = s.basis_value(0, -vz[k]);
        acc[k] += 0.5 * (a * a + b * b);
      }
    }
    for (double& x : acc) x /= double(steps);
    return acc;
  });
  std::ostringstream vcsv;
  vcsv << "z,empirical,predicted,se\n";
  for (std::size_t k = 0; k < vz.size(); ++k) {
    std::vector<double> col;
    for (const auto& v : vars) col.push_back(v[k]);
    Report r = compare_relative("SBE time-averaged variance " + h(vz[k]), mean_of(col), C / A, 0.05);
    r.note = "within 5% of C/A";
    vcsv << vz[k] << ',' << fmt(r.empirical) << ',' << fmt(r.predicted) << ',' << (r.se ? fmt(*r.se) : "")
         << '\n';
    out.reports.push_back(std::move(r));
  }
  out.files.emplace_back("sbe_variance.csv", vcsv.str());

  // B = 0 against the OU step, pathwise
  {
    Rng r1 = replica_rng(c.seed, 2, 0), r2 = replica_rng(c.seed, 2, 0);
    SpectralState s1 = ou_sample_stationary(ou, c.z_max, r1);
    SpectralState s2 = ou_sample_stationary(ou, c.z_max, r2);
    double diff = 0.0;
    for (int i = 0; i < 100; ++i) {
      s1 = sbe_step(s1, A, 0.0, C, 1e-3, r1);
      s2 = ou_step(s2, ou, 1e-3, r2);
      for (int z = 0; z <= c.z_max; ++z) diff = std::max(diff, std::abs(s1.at(0, z) - s2.at(0, z)));
    }
    out.reports.push_back(exact_check("max |sbe_step(B=0) - ou_step| over 100 steps", diff, 0.0, diff == 0.0,
                                      "bitwise equality"));
  }
  out.notes.push_back("Burgers solver with A = gamma, B = b^2 alpha, C = gamma tau^2, dt = " + fmt(dt));
  return out;
}

json report_json(const Report& r) {
  json j;
  j["quantity"] = r.quantity;
  j["empirical"] = r.empirical;
  j["predicted"] = r.predicted;
  j["se"] = r.se ? json(*r.se) : json(nullptr);
  j["z_score"] = r.z_score && std::isfinite(*r.z_score) ? json(*r.z_score) : json(nullptr);
  j["pass"] = r.pass ? json(*r.pass) : json(nullptr);
  j["kind"] = r.kind;
  j["note"] = r.note;
  return j;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config) {
  const auto diags = validate(config);
  for (const auto& d : diags) {
    if (d.severity == "error") throw std::invalid_argument(d.field + ": " + d.message);
  }
  config.model.validate();
  ExperimentResult out;
  switch (config.experiment) {
    case Experiment::moments: out = run_moments(config); break;
    case Experiment::stationarity: out = run_stationarity(config); break;
    case Experiment::qv_limits: out = run_qv_limits(config); break;
    case Experiment::ou_regime: out = run_ou_regime(config); break;
    case Experiment::drifted_ou_regime: out = run_drifted_ou_regime(config); break;
    case Experiment::transport_regime: out = run_transport_regime(config); break;
    case Experiment::sbe_regime: out = run_sbe_regime(config); break;
    case Experiment::bg_test: out = run_bg_test(config); break;
    case Experiment::scaling_fit: out = run_scaling_fit(config); break;
    case Experiment::spde_only: out = run_spde_only(config); break;
  }
  for (const auto& d : diags) out.notes.push_back(d.severity + ": " + d.field + ": " + d.message);
  if (config.ensemble_size == 1) {
    // a single replica supports no inference
    for (auto& r : out.reports) {
      if (r.kind != "statistical") continue;
      r.se.reset();
      r.z_score.reset();
      r.pass.reset();
    }
  }
  return out;
}

bool any_failed(const ExperimentResult& result) {
  for (const auto& r : result.reports) {
    if (r.pass && !*r.pass) return true;
  }
  return false;
}

std::string results_json(const RunConfig& config, const ExperimentResult& result, bool final,
                         const std::string& error) {
  json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["experiment"] = to_string(config.experiment);
  j["final"] = final;
  std::string status;
  if (!error.empty()) {
    status = "error";
  } else {
    status = any_failed(result) ? "fail" : "pass";
  }
  j["status"] = status;
  j["error"] = error.empty() ? json(nullptr) : json(error);
  j["seed"] = config.seed;
  j["ensemble_size"] = config.ensemble_size;
  j["reports"] = json::array();
  for (const auto& r : result.reports) j["reports"].push_back(report_json(r));
  j["files"] = json::array();
  for (const auto& [name, content] : result.files) j["files"].push_back(name);
  j["notes"] = result.notes;
  return j.dump(2) + "\n";
}

std::string provenance_json(const RunConfig& config) {
  json j;
  j["config"] = json::parse(serialize_config(config));
  j["seed"] = config.seed;
  j["version"] = version();
  j["schema_version"] = kResultsSchemaVersion;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  j["timestamp"] = buf;
  j["compiler"] = __VERSION__;
  return j.dump(2) + "\n";
}

std::string z_regime(double kappa, double a) {
  constexpr double tol = 1e-12;
  if (std::abs(a - 2.0) < tol && kappa > 1.0 + tol) return "ou";
  if (std::abs(a - 2.0) < tol && std::abs(kappa - 1.0) < tol) return "drifted_ou";
  if (kappa < 1.0 - tol && std::abs(a - (kappa + 1.0)) < tol) return "transport";
  if (a < std::min(2.0, kappa + 1.0) - tol) return "frozen";
  return "open";
}

std::string y_regime(double kappa, double a) {
  constexpr double tol = 1e-12;
  if (a < std::min(2.0, 4.0 / 3.0 * (kappa + 1.0)) - tol) return "frozen";
  if (std::abs(a - 2.0) < tol && kappa > 0.5 + tol) return "ou";
  if (std::abs(a - 2.0) < tol && std::abs(kappa - 0.5) < tol) return "sbe";
  return "open";
}

}  // namespace fluctlab
