#include <doctest.h>

#include <json.hpp>

#include "fluctlab/experiments.hpp"
#include "fluctlab/io.hpp"
#include "fluctlab/run_config.hpp"

using namespace fluctlab;
using nlohmann::json;

namespace {
bool has_field(const std::vector<Diagnostic>& d, const std::string& severity, const std::string& field) {
  for (const auto& x : d)
    if (x.severity == severity && x.field == field) return true;
  return false;
}
}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.experiment = Experiment::bg_test;
  c.model.kappa = 0.5;
  c.model.n = 64;
  c.integrator.scheme = Scheme::event_driven;
  c.integrator.dt = 1e-4;
  c.sizes = {64, 128};
  c.eps = {0.1, 0.2};
  c.lags = {0.01};
  c.seed = 123456789012345ULL;
  const RunConfig back = parse_config(serialize_config(c));
  CHECK(back == c);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"T": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "moments", "Tt": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "moments", "model": {"kapa": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "moments", "T": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "moments", "integrator": {"scheme": "euler"}})"), ConfigError);
}

TEST_CASE("validation diagnostics") {
  RunConfig c;
  CHECK(validate(c).empty());

  c.model.kappa = -0.1;
  auto d = validate(c);
  REQUIRE(has_errors(d));
  CHECK(d[0].field == "model.kappa");
  CHECK(d[0].message == "kappa must be ≥ 0");

  c = RunConfig{};
  c.experiment = Experiment::ou_regime;
  c.model.kappa = 0.5;
  d = validate(c);
  CHECK(!has_errors(d));
  CHECK(has_field(d, "warning", "model.kappa"));

  c = RunConfig{};
  c.modes = {64};
  CHECK(has_field(validate(c), "error", "modes"));

  c = RunConfig{};
  c.experiment = Experiment::bg_test;
  c.sizes = {16};
  c.eps = {0.05};
  CHECK(has_field(validate(c), "error", "eps"));

  c = RunConfig{};
  c.experiment = Experiment::scaling_fit;
  c.sizes = {64, 128};
  CHECK(has_field(validate(c), "error", "sizes"));
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
}

TEST_CASE("regime tables") {
  CHECK(z_regime(2.0, 2.0) == "ou");
  CHECK(z_regime(1.0, 2.0) == "drifted_ou");
  CHECK(z_regime(0.5, 1.5) == "transport");
  CHECK(z_regime(0.5, 1.0) == "frozen");
  CHECK(z_regime(0.5, 2.0) == "open");
  CHECK(y_regime(0.5, 1.5) == "frozen");
  CHECK(y_regime(0.5, 2.0) == "sbe");
  CHECK(y_regime(1.0, 2.0) == "ou");
  CHECK(y_regime(0.25, 2.0) == "open");
}

TEST_CASE("results are deterministic per seed and a single replica carries no inference") {
  RunConfig c;
  c.experiment = Experiment::moments;
  c.model.n = 200;
  c.ensemble_size = 20;
  c.seed = 9;
  const auto a = results_json(c, run_experiment(c), true);
  const auto b = results_json(c, run_experiment(c), true);
  CHECK(a == b);
  const json j = json::parse(a);
  CHECK(j["schema_version"] == kResultsSchemaVersion);
  CHECK(j["final"] == true);
  CHECK(j["error"].is_null());

  c.ensemble_size = 1;
  const json one = json::parse(results_json(c, run_experiment(c), true));
  bool saw_statistical = false;
  for (const auto& r : one["reports"]) {
    if (r["kind"] != "statistical") continue;
    saw_statistical = true;
    CHECK(r["se"].is_null());
    CHECK(r["pass"].is_null());
    CHECK(r["z_score"].is_null());
  }
  CHECK(saw_statistical);

  const json err = json::parse(results_json(c, ExperimentResult{}, false, "boom"));
  CHECK(err["status"] == "error");
  CHECK(err["final"] == false);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(format_double(v)) == v);
}
