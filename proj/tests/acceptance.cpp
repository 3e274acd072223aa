// Acceptance suite: one line per criterion, "[PASS]" or "[FAIL]".
// Usage: acceptance [C1 C2 ...]   (no arguments runs all criteria)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/equilibrium.hpp"
#include "fluctlab/experiments.hpp"
#include "fluctlab/io.hpp"

using namespace fluctlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

void print_reports(const ExperimentResult& r) {
  for (const auto& rep : r.reports) {
    const char* tag = !rep.pass ? "  --  " : (*rep.pass ? "  ok  " : "  XX  ");
    std::cout << "      " << tag << rep.quantity << ": " << format_double(rep.empirical) << " vs "
              << format_double(rep.predicted);
    if (rep.se) std::cout << " (se " << format_double(*rep.se) << ")";
    std::cout << "\n";
  }
}

// Every gated report passes and there is at least one.
Outcome gated(const ExperimentResult& r, const std::string& what) {
  print_reports(r);
  int gates = 0, failed = 0;
  for (const auto& rep : r.reports) {
    if (!rep.pass) continue;
    ++gates;
    if (!*rep.pass) ++failed;
  }
  return {gates > 0 && failed == 0,
          what + ": " + std::to_string(gates - failed) + "/" + std::to_string(gates) + " checks"};
}

RunConfig base(Experiment e, int n, double kappa, double a, std::size_t replicas, double T) {
  RunConfig c;
  c.experiment = e;
  c.model.n = n;
  c.model.kappa = kappa;
  c.model.a = a;
  c.ensemble_size = replicas;
  c.T = T;
  c.seed = 20261015;
  c.workers = 1;
  return c;
}

Outcome c1() {
  ModelParams p;
  p.n = 128;
  const IntegratorSpec spec = IntegratorSpec::defaults(p);
  auto sum_xi = [&](const Configuration& c) {
    double s = 0;
    for (double v : xi_of(c, p.b)) s += v;
    return s;
  };
  double worst_xi = 0, worst_e = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Configuration c0 = sample_gibbs(p, 1, seed)[0];
    Rng rng(seed, 1);
    const auto traj = evolve(c0, p, spec, 1.0, uniform_times(1.0, 10), rng);
    const double x0 = sum_xi(c0), e0 = conserved(c0, p).energy;
    for (const auto& s : traj.states) {
      worst_xi = std::max(worst_xi, std::abs(sum_xi(s) - x0) / std::abs(x0));
      worst_e = std::max(worst_e, std::abs(conserved(s, p).energy - e0) / std::abs(e0));
    }
  }
  ModelParams q = p;
  q.alpha = 0.0;
  bool exact = true;
  for (Scheme scheme : {Scheme::split_strang, Scheme::event_driven}) {
    IntegratorSpec s = IntegratorSpec::defaults(q);
    s.scheme = scheme;
    const Configuration c0 = sample_gibbs(q, 1, 7)[0];
    Rng rng(7, 1);
    const auto traj = evolve(c0, q, s, 1.0, std::vector<double>{1.0}, rng);
    const Conserved a = conserved(c0, q), b = conserved(traj.states[0], q);
    exact = exact && a.energy == b.energy && a.volume == b.volume && traj.exchange_count > 0;
  }
  std::cout << "      sum xi drift " << worst_xi << ", sum V drift " << worst_e
            << ", exchange-only exact: " << (exact ? "yes" : "no") << "\n";
  return {worst_xi <= 1e-8 && worst_e <= 1e-8 && exact,
          "max rel drift xi " + format_double(worst_xi) + ", V " + format_double(worst_e)};
}

Outcome c2() {
  return gated(run_experiment(base(Experiment::moments, 1000, 1, 2, 1000, 1)), "10^6 Gibbs samples");
}

Outcome c3() {
  return gated(run_experiment(base(Experiment::stationarity, 128, 1, 2, 2000, 1)), "2000 replicas to T=1");
}

Outcome c4() {
  bool pass = true;
  std::string summary;
  for (double kappa : {2.0, 1.0}) {
    RunConfig c = base(Experiment::qv_limits, 256, kappa, 2, 400, 0.1);
    c.snapshot_count = 200;
    std::cout << "    kappa = " << kappa << "\n";
    const Outcome o = gated(run_experiment(c), "kappa=" + format_double(kappa));
    pass = pass && o.pass;
    summary += (summary.empty() ? "" : "; ") + o.summary;
  }
  return {pass, summary};
}

Outcome c5() {
  RunConfig c = base(Experiment::ou_regime, 256, 2, 2, 4000, 0.04);
  c.modes = {1, 2};
  c.lags = {0.005, 0.01, 0.02};
  return gated(run_experiment(c), "(Y,V) two-time covariances, z in {1,2}");
}

Outcome c6() {
  RunConfig c = base(Experiment::transport_regime, 1024, 0.5, 1.5, 4000, 0.02);
  c.modes = {1, 2};
  return gated(run_experiment(c), "transport pairings and frozen Y");
}

Outcome c7() {
  RunConfig c = base(Experiment::scaling_fit, 128, 0.5, 2, 2000, 0.01);
  c.sizes = {64, 128, 256};
  return gated(run_experiment(c), "slope of log Var vs log n");
}

Outcome c8() {
  RunConfig c = base(Experiment::bg_test, 128, 1, 2, 1000, 0.2);
  c.sizes = {64, 128};
  c.eps = {0.05, 0.1, 0.2};
  return gated(run_experiment(c), "ratio spread and static oracle");
}

Outcome c9() {
  RunConfig c = base(Experiment::spde_only, 128, 1, 2, 200, 1);
  c.z_max = 64;
  return gated(run_experiment(c), "Lyapunov, OU autocorrelation, SBE variance, B=0");
}

Outcome c10() {
  RunConfig c = base(Experiment::sbe_regime, 256, 0.5, 2, 400, 0.01);
  c.z_max = 64;
  return gated(run_experiment(c), "quadratic term and energy estimate");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"C1", "exact conservation", 60, c1},
      {"C2", "Gibbs moments", 60, c2},
      {"C3", "stationarity", 1800, c3},
      {"C4", "QV limits", 7200, c4},
      {"C5", "OU regime", 7200, c5},
      {"C6", "transport regime", 3600, c6},
      {"C7", "H_-1 scaling", 7200, c7},
      {"C8", "second-order Boltzmann-Gibbs", 7200, c8},
      {"C9", "SPDE solvers", 600, c9},
      {"C10", "SBE regime", 7200, c10},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  std::vector<std::string> lines;
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    std::cout << c.id << " " << c.title << "\n" << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.summary += "; over the runtime budget";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, " [%.1f s]", secs);
    const std::string line = std::string(o.pass ? "[PASS] " : "[FAIL] ") + c.id + " " + c.title + ": " +
                             o.summary + buf;
    std::cout << line << "\n" << std::flush;
    lines.push_back(line);
    if (!o.pass) ++failed;
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l << "\n";
  return failed == 0 ? 0 : 1;
}
