#include "fluctlab/run_config.hpp"

#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>

namespace fluctlab {

using nlohmann::json;

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::string>> names = {
      {Experiment::moments, "moments"},
      {Experiment::stationarity, "stationarity"},
      {Experiment::qv_limits, "qv_limits"},
      {Experiment::ou_regime, "ou_regime"},
      {Experiment::drifted_ou_regime, "drifted_ou_regime"},
      {Experiment::transport_regime, "transport_regime"},
      {Experiment::sbe_regime, "sbe_regime"},
      {Experiment::bg_test, "bg_test"},
      {Experiment::scaling_fit, "scaling_fit"},
      {Experiment::spde_only, "spde_only"},
  };
  return names;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, v] : experiment_names()) {
    if (k == e) return v;
  }
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  for (const auto& [k, v] : experiment_names()) {
    if (v == name) return k;
  }
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

IntegratorSpec RunConfig::resolved_integrator() const {
  if (integrator.dt > 0) return integrator;
  IntegratorSpec spec = IntegratorSpec::defaults(model);
  spec.scheme = integrator.scheme;
  return spec;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"experiment", "model", "integrator", "ensemble_size", "snapshot_count", "T", "seed",
                  "modes", "output_dir", "sizes", "eps", "lags", "z_max", "workers"},
                 "config");
  RunConfig c;
  if (!j.contains("experiment")) throw ConfigError("missing key 'experiment'");
  try {
    c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    if (!m.is_object()) throw ConfigError("'model' must be an object");
    reject_unknown(m, {"b", "gamma", "alpha", "kappa", "a", "n", "beta", "lambda"}, "model");
    read(m, "b", c.model.b);
    read(m, "gamma", c.model.gamma);
    read(m, "alpha", c.model.alpha);
    read(m, "kappa", c.model.kappa);
    read(m, "a", c.model.a);
    read(m, "n", c.model.n);
    read(m, "beta", c.model.beta);
    read(m, "lambda", c.model.lambda);
  }
  if (j.contains("integrator")) {
    const json& s = j.at("integrator");
    if (!s.is_object()) throw ConfigError("'integrator' must be an object");
    reject_unknown(s, {"dt", "scheme", "ode_substeps"}, "integrator");
    read(s, "dt", c.integrator.dt);
    read(s, "ode_substeps", c.integrator.ode_substeps);
    if (s.contains("scheme")) {
      const auto name = s.at("scheme").get<std::string>();
      if (name == "split_strang") {
        c.integrator.scheme = Scheme::split_strang;
      } else if (name == "event_driven") {
        c.integrator.scheme = Scheme::event_driven;
      } else {
        throw ConfigError("unknown scheme '" + name + "'");
      }
    }
  }
  read(j, "ensemble_size", c.ensemble_size);
  read(j, "snapshot_count", c.snapshot_count);
  read(j, "T", c.T);
  read(j, "seed", c.seed);
  read(j, "modes", c.modes);
  read(j, "output_dir", c.output_dir);
  read(j, "sizes", c.sizes);
  read(j, "eps", c.eps);
  read(j, "lags", c.lags);
  read(j, "z_max", c.z_max);
  read(j, "workers", c.workers);
  return c;
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["model"] = {{"b", c.model.b},         {"gamma", c.model.gamma}, {"alpha", c.model.alpha},
                {"kappa", c.model.kappa}, {"a", c.model.a},         {"n", c.model.n},
                {"beta", c.model.beta},   {"lambda", c.model.lambda}};
  j["integrator"] = {{"dt", c.integrator.dt},
                     {"scheme", c.integrator.scheme == Scheme::split_strang ? "split_strang" : "event_driven"},
                     {"ode_substeps", c.integrator.ode_substeps}};
  j["ensemble_size"] = c.ensemble_size;
  j["snapshot_count"] = c.snapshot_count;
  j["T"] = c.T;
  j["seed"] = c.seed;
  j["modes"] = c.modes;
  j["output_dir"] = c.output_dir;
  j["sizes"] = c.sizes;
  j["eps"] = c.eps;
  j["lags"] = c.lags;
  j["z_max"] = c.z_max;
  j["workers"] = c.workers;
  return j.dump(2) + "\n";
}

std::vector<Diagnostic> validate(const RunConfig& c) {
  std::vector<Diagnostic> d;
  auto error = [&](std::string field, std::string msg) {
    d.push_back({"error", std::move(field), std::move(msg)});
  };
  auto warn = [&](std::string field, std::string msg) {
    d.push_back({"warning", std::move(field), std::move(msg)});
  };
  const ModelParams& m = c.model;
  if (!(m.b > 0)) error("model.b", "b must be > 0");
  if (!(m.gamma >= 0)) error("model.gamma", "gamma must be >= 0");
  if (m.gamma == 0) warn("model.gamma", "gamma = 0 switches off the exchange noise");
  if (!std::isfinite(m.alpha)) error("model.alpha", "alpha must be finite");
  if (!(m.kappa >= 0)) error("model.kappa", "kappa must be ≥ 0");
  if (!(m.a > 0 && m.a <= 2)) error("model.a", "a must lie in (0, 2]");
  if (m.n < 2) error("model.n", "n must be ≥ 2");
  if (!(m.beta > 0)) error("model.beta", "beta must be > 0");
  if (!(m.lambda > -1)) error("model.lambda", "lambda must be > -1");
  if (c.integrator.dt < 0) error("integrator.dt", "dt must be > 0 (or 0 for the default)");
  if (c.integrator.ode_substeps < 1) error("integrator.ode_substeps", "ode_substeps must be ≥ 1");
  if (c.ensemble_size < 1) error("ensemble_size", "ensemble_size must be ≥ 1");
  if (c.snapshot_count < 1) error("snapshot_count", "snapshot_count must be ≥ 1");
  if (!(c.T > 0)) error("T", "T must be > 0");
  if (c.workers < 1) error("workers", "workers must be ≥ 1");
  if (c.z_max < 1) error("z_max", "z_max must be ≥ 1");
  for (int z : c.modes) {
    if (2 * std::abs(z) >= m.n) error("modes", "modes must satisfy |z| < n/2");
  }
  for (double e : c.eps) {
    if (!(e > 0 && e < 1)) error("eps", "eps values must lie in (0, 1)");
  }
  for (double l : c.lags) {
    if (!(l >= 0) || l > c.T) error("lags", "lags must lie in [0, T]");
  }

  const bool diffusive = m.a == 2.0;
  switch (c.experiment) {
    case Experiment::ou_regime:
      if (!(m.kappa > 1) || !diffusive) {
        warn("model.kappa", "ou_regime: the Ornstein-Uhlenbeck limit needs a = 2 and kappa > 1");
      }
      break;
    case Experiment::drifted_ou_regime:
      if (m.kappa != 1.0 || !diffusive) {
        warn("model.kappa", "drifted_ou_regime: the drifted OU limit needs a = 2 and kappa = 1");
      }
      break;
    case Experiment::transport_regime:
      if (!(m.kappa < 1) || std::abs(m.a - (m.kappa + 1)) > 1e-12) {
        warn("model.a", "transport_regime: the trivial transport limit needs kappa < 1 and a = kappa + 1");
      }
      break;
    case Experiment::sbe_regime:
      if (m.kappa != 0.5 || !diffusive) {
        warn("model.kappa", "sbe_regime: the Burgers limit needs a = 2 and kappa = 1/2");
      }
      break;
    case Experiment::bg_test:
      if (!diffusive) error("model.a", "bg_test requires a = 2");
      for (int n : c.sizes) {
        for (double e : c.eps) {
          if (std::floor(e * n) < 1) error("eps", "bg_test needs floor(eps n) ≥ 1 for every grid cell");
        }
      }
      break;
    case Experiment::scaling_fit:
      if (!diffusive) error("model.a", "scaling_fit requires a = 2");
      if (!c.sizes.empty() && c.sizes.size() < 3) error("sizes", "scaling_fit needs at least 3 sizes");
      for (int n : c.sizes) {
        if (n < 2) error("sizes", "sizes must be ≥ 2");
      }
      break;
    case Experiment::qv_limits:
      if (!diffusive) warn("model.a", "qv_limits: the QV limits are stated for a = 2");
      break;
    default:
      break;
  }
  return d;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.severity == "error") return true;
  }
  return false;
}

}  // namespace fluctlab
