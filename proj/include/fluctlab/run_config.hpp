#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/model.hpp"

namespace fluctlab {

enum class Experiment {
  moments,
  stationarity,
  qv_limits,
  ou_regime,
  drifted_ou_regime,
  transport_regime,
  sbe_regime,
  bg_test,
  scaling_fit,
  spde_only
};

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);  // throws std::invalid_argument

struct RunConfig {
  Experiment experiment = Experiment::moments;
  ModelParams model;
  IntegratorSpec integrator;  // dt == 0 selects IntegratorSpec::defaults(model)
  std::size_t ensemble_size = 100;
  int snapshot_count = 400;
  double T = 1.0;
  std::uint64_t seed = 1;
  std::vector<int> modes{1};
  std::string output_dir = "out";

  // experiment-specific knobs; empty means the experiment's default
  std::vector<int> sizes;     // scaling_fit, bg_test
  std::vector<double> eps;    // bg_test, sbe_regime
  std::vector<double> lags;   // ou_regime, drifted_ou_regime
  int z_max = 16;             // spde_only, sbe_regime
  int workers = 1;

  IntegratorSpec resolved_integrator() const;
  bool operator==(const RunConfig&) const = default;
};

struct Diagnostic {
  std::string severity;  // "error" or "warning"
  std::string field;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON text <-> RunConfig. Unknown keys are rejected so typos do not pass silently.
RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& config);

// Every violation and regime warning; empty means valid.
std::vector<Diagnostic> validate(const RunConfig& config);
bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace fluctlab
