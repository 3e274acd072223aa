#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fluctlab/run_config.hpp"
#include "fluctlab/verify.hpp"

namespace fluctlab {

inline constexpr const char* kResultsSchemaVersion = "1.0.0";

const char* version();

struct ExperimentResult {
  std::vector<Report> reports;
  std::vector<std::pair<std::string, std::string>> files;  // CSV name, content
  std::vector<std::string> notes;
};

// Runs config.experiment end to end. Throws on invalid parameters or on a
// numerical failure of the integrators.
ExperimentResult run_experiment(const RunConfig& config);

// Some gated report failed.
bool any_failed(const ExperimentResult& result);

// Serialized results.json. `error` is set for runs that stopped early; such
// results are marked non-final.
std::string results_json(const RunConfig& config, const ExperimentResult& result, bool final,
                         const std::string& error = "");
// Serialized provenance.json: config, seed, code version and a timestamp.
std::string provenance_json(const RunConfig& config);

// Regime labels for the (kappa, a) phase diagrams of the two fields.
std::string z_regime(double kappa, double a);
std::string y_regime(double kappa, double a);

}  // namespace fluctlab
