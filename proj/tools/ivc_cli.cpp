// Copyright 2026 The ivc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch entry point: validate drug libraries, run Monte Carlo scenarios,
// analyze CQI exports.
//
// Exit codes: 0 ok, 1 usage, 2 validation failure, 3 invariant violated
// during trials, 4 I/O failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ivc/audit_cqi.hpp"
#include "ivc/drug_library.hpp"
#include "ivc/errors.hpp"
#include "ivc/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitViolation = 3;
constexpr int kExitIo = 4;

// CQI logs of this many leading trials go into --export-cqi.
constexpr std::uint64_t kExportTrials = 1000;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << bytes;
  if (!out.flush()) throw IoError("write failed for " + path);
}

void emit(const std::optional<std::string>& out, const std::string& bytes) {
  if (out) {
    write_file(*out, bytes);
  } else {
    std::cout << bytes;
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int validate_lib(const std::string& path) {
  const std::string text = read_file(path);
  try {
    const ivc::DrugLibrary lib = ivc::parse_library(text);
    std::cout << "valid: version " << lib.version() << ", " << lib.entries().size()
              << " entries, digest " << lib.digest() << "\n";
    return kExitOk;
  } catch (const ivc::Error& e) {
    std::cout << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  }
}

struct RunArgs {
  std::string scenario;
  std::optional<std::string> out;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> export_cqi;
};

int run(const RunArgs& args) {
  const std::string text = read_file(args.scenario);
  ivc::Scenario scenario;
  try {
    scenario = ivc::parse_scenario(text, std::filesystem::path(args.scenario).parent_path());
    if (args.seed) scenario.seed = *args.seed;
    if (args.trials) scenario.trials = *args.trials;
    ivc::validate(scenario);
  } catch (const ivc::Error& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitInvalid;
  }
  std::cerr << "seed: " << scenario.seed << "\n";

  ivc::RunOptions options;
  options.keep_cqi_trials = args.export_cqi ? kExportTrials : 0;
  options.keep_outcomes = args.format == "csv";
  const ivc::MonteCarloRun result = ivc::run_monte_carlo(scenario, options);

  emit(args.out, ivc::to_json(result.report).dump(2) + "\n");
  if (args.format == "csv") {
    std::string csv = "trial,outcome\n";
    for (std::size_t i = 0; i < result.outcomes.size(); ++i)
      csv += std::to_string(i) + "," + std::string(ivc::to_string(result.outcomes[i])) + "\n";
    emit(args.out ? std::optional<std::string>(*args.out + ".trials.csv") : std::nullopt, csv);
  }
  if (args.export_cqi) {
    std::vector<ivc::CqiEvent> events;
    for (const auto& log : result.cqi_logs)
      events.insert(events.end(), log.events().begin(), log.events().end());
    const auto format = ends_with(*args.export_cqi, ".csv") ? ivc::ExportFormat::Csv
                                                            : ivc::ExportFormat::JsonLines;
    write_file(*args.export_cqi, ivc::export_cqi(events, format));
  }

  if (result.report.invariant_violations > 0) {
    std::cerr << "invariant violations: " << result.report.invariant_violations << "\n";
    for (const auto& v : result.report.violation_samples) std::cerr << "  " << v << "\n";
    return kExitViolation;
  }
  return kExitOk;
}

int report(const std::string& path, const std::string& format, const std::optional<std::string>& out) {
  const std::string text = read_file(path);
  std::vector<ivc::CqiEvent> events;
  try {
    events = ivc::import_jsonl(text);
  } catch (const ivc::Error& e) {
    std::cerr << "invalid CQI export: " << e.what() << "\n";
    return kExitInvalid;
  }
  const ivc::AnalyticsReport analytics = ivc::analyze(events);
  emit(out, format == "csv" ? ivc::to_csv(analytics) : ivc::to_json(analytics).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-operator infusion concurrence simulator"};
  app.require_subcommand(1);

  std::string lib_path;
  auto* validate_cmd = app.add_subcommand("validate-lib", "Parse and validate a drug library");
  validate_cmd->add_option("library", lib_path, "Drug library JSON")->required();

  RunArgs run_args;
  std::string out_path;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::string export_path;
  auto* run_cmd = app.add_subcommand("run", "Run a Monte Carlo scenario");
  run_cmd->add_option("scenario", run_args.scenario, "Scenario JSON")->required();
  auto* run_out = run_cmd->add_option("--out", out_path, "Report path (stdout when omitted)");
  run_cmd->add_option("--format", run_args.format, "json, or csv to add per-trial outcomes")
      ->check(CLI::IsMember({"json", "csv"}));
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the scenario seed");
  auto* trials_opt = run_cmd->add_option("--trials", trials, "Override the trial count");
  auto* export_opt = run_cmd->add_option("--export-cqi", export_path,
                                         "Write CQI events of the first trials (.jsonl or .csv)");

  std::string cqi_path;
  std::string report_format = "json";
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Analyze a json-lines CQI export");
  report_cmd->add_option("cqi", cqi_path, "CQI json-lines export")->required();
  report_cmd->add_option("--format", report_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  auto* report_out_opt = report_cmd->add_option("--out", report_out, "Output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return validate_lib(lib_path);
    if (*run_cmd) {
      if (*run_out) run_args.out = out_path;
      if (*seed_opt) run_args.seed = seed;
      if (*trials_opt) run_args.trials = trials;
      if (*export_opt) run_args.export_cqi = export_path;
      return run(run_args);
    }
    if (*report_cmd)
      return report(cqi_path, report_format,
                    *report_out_opt ? std::optional<std::string>(report_out) : std::nullopt);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}
