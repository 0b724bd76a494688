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

#include <cmath>
#include <fstream>
#include <sstream>

#include "ivc/errors.hpp"
#include "ivc/simulator.hpp"

namespace ivc {

namespace {

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

OperatorModel operator_from_json(const Json& j) {
  OperatorModel m;
  m.n = j.at("n").get<std::int64_t>();
  if (auto it = j.find("taxonomy"); it != j.end()) {
    m.taxonomy = {};
    for (auto kv = it->begin(); kv != it->end(); ++kv)
      m.taxonomy[static_cast<std::size_t>(corruption_kind_from_string(kv.key()))] = kv->get<double>();
  }
  if (auto it = j.find("fields"); it != j.end()) {
    m.fields.clear();
    for (const auto& f : *it) m.fields.push_back(program_field_from_string(f.get<std::string>()));
  }
  m.base_miss = j.value("base_miss", 0.0);
  m.fatigue_c = j.value("fatigue_c", 0.0);
  return m;
}

Json operator_to_json(const OperatorModel& m) {
  Json taxonomy = Json::object();
  for (std::size_t k = 0; k < kCorruptionKinds; ++k)
    if (m.taxonomy[k] > 0.0) taxonomy[std::string(to_string(static_cast<CorruptionKind>(k)))] = m.taxonomy[k];
  Json fields = Json::array();
  for (auto f : m.fields) fields.push_back(std::string(to_string(f)));
  return {{"n", m.n},
          {"taxonomy", std::move(taxonomy)},
          {"fields", std::move(fields)},
          {"base_miss", m.base_miss},
          {"fatigue_c", m.fatigue_c}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidScenario, "cannot read library file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void validate(const Scenario& s) {
  validate(s.operator_x);
  if (s.mode == Mode::Concurrence) validate(s.operator_y);
  if (s.trials < 1) throw Error(ErrorCode::InvalidScenario, "trials must be >= 1");
  if (!probability(s.wrong_pump_routing_p))
    throw Error(ErrorCode::InvalidScenario, "wrong_pump_routing_p must lie in [0, 1]");
  if (!probability(s.false_alarm_rate))
    throw Error(ErrorCode::InvalidScenario, "false_alarm_rate must lie in [0, 1]");
  if (!(std::isfinite(s.dt_hours) && s.dt_hours > 0.0))
    throw Error(ErrorCode::InvalidScenario, "dt_hours must be positive");
  for (const auto& f : s.fault_schedule)
    if (!(std::isfinite(f.t_hours) && f.t_hours >= 0.0))
      throw Error(ErrorCode::InvalidScenario, "fault t_hours must be >= 0");
  try {
    validate_program(s.intended);
    const auto verdict = check_program(lookup(s.library, s.intended.drug_id, s.intended.care_area), s.intended);
    if (!verdict.passed())
      throw Error(ErrorCode::InvalidScenario, "intended program does not pass the drug library");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw;
    throw Error(ErrorCode::InvalidScenario, std::string("intended program: ") + e.what());
  }
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  Scenario s;
  try {
    const Json doc = Json::parse(text);
    const Json& lib = doc.at("library");
    if (lib.is_string()) {
      std::filesystem::path path = lib.get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      s.library = parse_library(read_file(path));
    } else {
      s.library = library_from_json(lib);
    }
    s.intended = program_from_json(doc.at("intended_program"));
    const auto mode = doc.value("mode", std::string("concurrence"));
    if (mode == "single") {
      s.mode = Mode::SingleOperator;
    } else if (mode == "concurrence") {
      s.mode = Mode::Concurrence;
    } else {
      throw Error(ErrorCode::InvalidScenario, "mode must be 'single' or 'concurrence'");
    }
    s.operator_x = operator_from_json(doc.at("operator_x"));
    s.operator_y = doc.contains("operator_y") ? operator_from_json(doc.at("operator_y")) : s.operator_x;
    if (doc.contains("commanding")) s.commanding = operator_from_json(doc.at("commanding"));
    const auto policy = doc.value("override_policy", std::string("approve_all"));
    if (policy == "approve_all") {
      s.override_policy = OverridePolicy::ApproveAll;
    } else if (policy == "refuse_all") {
      s.override_policy = OverridePolicy::RefuseAll;
    } else {
      throw Error(ErrorCode::InvalidScenario, "override_policy must be 'approve_all' or 'refuse_all'");
    }
    s.override_budget = doc.value("override_budget", std::size_t{3});
    if (auto it = doc.find("fault_schedule"); it != doc.end()) {
      for (const auto& f : *it) {
        ScheduledFault fault;
        fault.t_hours = f.at("t_hours").get<double>();
        fault.kind = alarm_kind_from_string(f.at("kind").get<std::string>());
        fault.clinically_significant = f.value("significant", true);
        fault.abort = f.value("abort", false);
        s.fault_schedule.push_back(fault);
      }
    }
    s.wrong_pump_routing_p = doc.value("wrong_pump_routing_p", 0.0);
    s.false_alarm_rate = doc.value("false_alarm_rate", 0.0);
    s.dt_hours = doc.value("dt_hours", 0.25);
    s.trials = doc.at("trials").get<std::uint64_t>();
    s.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidScenario, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw;
    throw Error(ErrorCode::InvalidScenario, e.what());
  }
  validate(s);
  return s;
}

Json to_json(const Scenario& s) {
  Json faults = Json::array();
  for (const auto& f : s.fault_schedule)
    faults.push_back({{"t_hours", f.t_hours},
                      {"kind", std::string(to_string(f.kind))},
                      {"significant", f.clinically_significant},
                      {"abort", f.abort}});
  return {{"library", to_json(s.library)},
          {"intended_program", to_json(s.intended)},
          {"mode", s.mode == Mode::Concurrence ? "concurrence" : "single"},
          {"operator_x", operator_to_json(s.operator_x)},
          {"operator_y", operator_to_json(s.operator_y)},
          {"commanding", operator_to_json(s.commanding)},
          {"override_policy", s.override_policy == OverridePolicy::ApproveAll ? "approve_all" : "refuse_all"},
          {"override_budget", s.override_budget},
          {"fault_schedule", std::move(faults)},
          {"wrong_pump_routing_p", s.wrong_pump_routing_p},
          {"false_alarm_rate", s.false_alarm_rate},
          {"dt_hours", s.dt_hours},
          {"trials", s.trials},
          {"seed", s.seed}};
}

}  // namespace ivc
