#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "fluctlab/experiments.hpp"
#include "fluctlab/io.hpp"
#include "fluctlab/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fluctlab;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kRuntime = 2, kFailed = 3 };

json diagnostics_json(const std::vector<Diagnostic>& diags) {
  json j = json::array();
  for (const auto& d : diags) j.push_back({{"severity", d.severity}, {"field", d.field}, {"message", d.message}});
  return j;
}

std::optional<RunConfig> load(const std::string& path, std::vector<Diagnostic>& diags) {
  try {
    return parse_config(read_text_file(path));
  } catch (const std::exception& e) {
    diags.push_back({"error", "config", e.what()});
    return std::nullopt;
  }
}

int cmd_validate(const std::string& path) {
  std::vector<Diagnostic> diags;
  if (auto cfg = load(path, diags)) diags = validate(*cfg);
  std::cout << json{{"diagnostics", diagnostics_json(diags)}}.dump(2) << "\n";
  return has_errors(diags) ? kInvalid : kOk;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> workers,
            std::optional<std::string> output) {
  std::vector<Diagnostic> diags;
  auto loaded = load(path, diags);
  if (!loaded) {
    std::cout << json{{"diagnostics", diagnostics_json(diags)}}.dump(2) << "\n";
    return kInvalid;
  }
  RunConfig cfg = *loaded;
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (output) cfg.output_dir = *output;
  diags = validate(cfg);
  if (has_errors(diags)) {
    std::cout << json{{"diagnostics", diagnostics_json(diags)}}.dump(2) << "\n";
    return kInvalid;
  }
  for (const auto& d : diags) std::cerr << d.severity << ": " << d.field << ": " << d.message << "\n";

  const fs::path dir(cfg.output_dir);
  try {
    fs::create_directories(dir);
    write_text_file(dir / "provenance.json", provenance_json(cfg));
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write to " << dir << ": " << e.what() << "\n";
    return kRuntime;
  }

  ExperimentResult result;
  try {
    result = run_experiment(cfg);
  } catch (const std::exception& e) {
    write_text_file(dir / "results.json", results_json(cfg, result, false, e.what()));
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntime;
  }
  for (const auto& [name, content] : result.files) write_text_file(dir / name, content);
  write_text_file(dir / "results.json", results_json(cfg, result, true));

  for (const auto& r : result.reports) {
    const char* tag = !r.pass ? "----" : (*r.pass ? "PASS" : "FAIL");
    std::cout << tag << "  " << r.quantity << ": " << format_double(r.empirical) << " vs "
              << format_double(r.predicted) << "\n";
  }
  return any_failed(result) ? kFailed : kOk;
}

int cmd_report(const std::string& dir) {
  json j;
  try {
    j = json::parse(read_text_file(fs::path(dir) / "results.json"));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  std::cout << "experiment: " << j.value("experiment", "?") << "  status: " << j.value("status", "?")
            << (j.value("final", false) ? "" : " (non-final)") << "\n";
  bool failed = false;
  for (const auto& r : j.at("reports")) {
    std::string tag = "----";
    if (r.at("pass").is_boolean()) {
      tag = r.at("pass").get<bool>() ? "PASS" : "FAIL";
      failed = failed || !r.at("pass").get<bool>();
    }
    std::cout << tag << "  " << r.at("quantity").get<std::string>() << ": " << r.at("empirical").dump()
              << " vs " << r.at("predicted").dump();
    if (r.at("se").is_number()) std::cout << " (se " << r.at("se").dump() << ")";
    std::cout << "\n";
  }
  if (!j.value("final", false)) return kRuntime;
  return failed ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluctuation experiments for the exponential-potential lattice model"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string run_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> output;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_path, "JSON config file")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--output", output, "Output directory");

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Check a config file and list diagnostics");
  val->add_option("config", validate_path, "JSON config file")->required();

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Summarize results.json of an output directory");
  rep->add_option("output_dir", report_dir, "Directory written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  if (*run) return cmd_run(run_path, seed, workers, output);
  if (*val) return cmd_validate(validate_path);
  return cmd_report(report_dir);
}
