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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ivc/alarm.hpp"
#include "ivc/audit_cqi.hpp"
#include "ivc/drug_library.hpp"
#include "ivc/program.hpp"

namespace ivc {

enum class CorruptionKind { DigitSubstitution, AdjacentTransposition, DoubleBounce, WrongDrug, WrongField };
inline constexpr std::size_t kCorruptionKinds = 5;

std::string_view to_string(CorruptionKind kind);
CorruptionKind corruption_kind_from_string(std::string_view text);

/// Numeric fields an operator keys digit by digit.
enum class ProgramField { Dose, Rate, Vtbi };

std::string_view to_string(ProgramField field);
ProgramField program_field_from_string(std::string_view text);

double field_value(const InfusionProgram& program, ProgramField field);
void set_field_value(InfusionProgram& program, ProgramField field, double value);

/// Per-operator error behaviour. Each keyed entry is wrong with
/// probability 1/n.
struct OperatorModel {
  std::int64_t n = 1;
  std::array<double, kCorruptionKinds> taxonomy{1.0, 0.0, 0.0, 0.0, 0.0};
  std::vector<ProgramField> fields{ProgramField::Dose, ProgramField::Rate, ProgramField::Vtbi};
  double base_miss = 0.0;
  double fatigue_c = 0.0;

  double error_probability() const { return 1.0 / static_cast<double>(n); }
  double weight(CorruptionKind kind) const { return taxonomy[static_cast<std::size_t>(kind)]; }
};

/// Throws InvalidScenario when n < 1, weights are negative or do not sum to
/// one, or ack parameters are out of range.
void validate(const OperatorModel& model);

/// Keypad manipulation on the shortest decimal rendering of a value.
namespace keypad {

std::string render(double value);
std::vector<std::size_t> digit_positions(std::string_view text);
/// Positions i such that text[i], text[i+1] are differing digits.
std::vector<std::size_t> transposable_positions(std::string_view text);
std::string substitute(std::string_view text, std::size_t pos, char digit);
std::string transpose(std::string_view text, std::size_t pos);
/// The key at pos registers twice: "12.5" at 1 -> "122.5".
std::string double_bounce(std::string_view text, std::size_t pos);
double parse(std::string_view text);

}  // namespace keypad

/// Entry the operator intended, possibly corrupted by one keying error.
/// The library supplies the drug ids WrongDrug can pick from.
InfusionProgram corrupt_entry(const OperatorModel& model, const InfusionProgram& intended,
                              const DrugLibrary& library, std::mt19937_64& rng);

/// Whether a corruption kind can be applied to this program at all.
bool corruption_applicable(CorruptionKind kind, const OperatorModel& model,
                           const InfusionProgram& intended, const DrugLibrary& library);

/// clamp(base_miss + c * false_alarms, 0, 1).
double miss_probability(double base_miss, double fatigue_c, std::uint64_t false_alarms_in_window);

enum class Mode { SingleOperator, Concurrence };
enum class OverridePolicy { ApproveAll, RefuseAll };

struct ScheduledFault {
  double t_hours = 0.0;
  AlarmKind kind = AlarmKind::Occlusion;
  bool clinically_significant = true;
  /// Operators answer this alarm with a joint abort instead of acknowledging.
  bool abort = false;
};

struct Scenario {
  DrugLibrary library;
  InfusionProgram intended;
  Mode mode = Mode::Concurrence;
  OperatorModel operator_x;
  OperatorModel operator_y;
  OperatorModel commanding;
  OverridePolicy override_policy = OverridePolicy::ApproveAll;
  std::size_t override_budget = 3;
  std::vector<ScheduledFault> fault_schedule;
  double wrong_pump_routing_p = 0.0;
  /// Per-step probability of a clinically insignificant nuisance alarm.
  double false_alarm_rate = 0.0;
  double dt_hours = 0.25;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
};

/// Throws InvalidScenario.
void validate(const Scenario& scenario);

/// Parses the scenario document. A string "library" is a path resolved
/// against base_dir.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Json to_json(const Scenario& scenario);

enum class TrialOutcome {
  CompletedCorrect,
  CaughtByMismatch,
  CaughtByDersHard,
  CaughtBySoftNoOverride,
  UndetectedErrorActuated,
  AbortedByConcurrence,
  HaltedNoLibraryEntry,
};
inline constexpr std::size_t kTrialOutcomes = 7;

std::string_view to_string(TrialOutcome outcome);

struct TrialResult {
  TrialOutcome outcome = TrialOutcome::CompletedCorrect;
  std::optional<InfusionProgram> actuated;
  std::uint64_t significant_alarms = 0;
  std::uint64_t significant_alarm_misses = 0;
  std::uint64_t false_alarms = 0;
  /// Internal consistency checks that failed during the trial.
  std::vector<std::string> violations;
  CqiLog log;
};

/// Independent rng streams for one trial, derived from (seed, trial index).
struct TrialStreams {
  std::mt19937_64 entry_x;
  std::mt19937_64 entry_y;
  std::mt19937_64 routing;
  std::mt19937_64 faults;
  std::mt19937_64 acks;

  TrialStreams(std::uint64_t seed, std::uint64_t trial_index);
};

double uniform01(std::mt19937_64& rng);

TrialResult run_trial(const Scenario& scenario, std::uint64_t trial_index);

/// Drives a trial with the two entries already decided. Used by run_trial
/// and by tests that force specific corruptions.
TrialResult run_trial_with_entries(const Scenario& scenario, std::uint64_t trial_index,
                                   const InfusionProgram& entry_x,
                                   const std::optional<InfusionProgram>& entry_y,
                                   TrialStreams& streams);

struct MonteCarloReport {
  Mode mode = Mode::Concurrence;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::array<std::uint64_t, kTrialOutcomes> counts{};
  std::uint64_t significant_alarms = 0;
  std::uint64_t significant_alarm_misses = 0;
  std::uint64_t false_alarms = 0;
  std::uint64_t invariant_violations = 0;
  std::vector<std::string> violation_samples;  // first few, by trial index
  double error_bound = 0.0;  // p_x * p_y in concurrence mode, p_x otherwise
  std::optional<double> oracle_undetected;

  std::uint64_t count(TrialOutcome o) const { return counts[static_cast<std::size_t>(o)]; }
  double rate(TrialOutcome o) const;

  friend bool operator==(const MonteCarloReport&, const MonteCarloReport&) = default;
};

struct RunOptions {
  /// Keep CQI logs of the first this-many trials.
  std::uint64_t keep_cqi_trials = 0;
  bool keep_outcomes = false;
};

struct MonteCarloRun {
  MonteCarloReport report;
  std::vector<CqiLog> cqi_logs;            // trial order
  std::vector<TrialOutcome> outcomes;      // trial order, when requested
};

/// OpenMP-parallel over trials. Results do not depend on thread count.
MonteCarloRun run_monte_carlo(const Scenario& scenario, const RunOptions& options = {});
/// Single-threaded reference with identical results.
MonteCarloRun run_monte_carlo_serial(const Scenario& scenario, const RunOptions& options = {});

struct BinomialInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval at 95%.
BinomialInterval wilson_interval(std::uint64_t successes, std::uint64_t trials);

Json to_json(const MonteCarloReport& report);

/// Exact probability of an UndetectedErrorActuated trial, by exhaustive
/// enumeration of each operator's corruption distribution. Concurrence:
/// (1 - r) * sum_k P_x(k) P_y(k) S(k); single operator:
/// r * S(routed) + (1 - r) * sum_k P_x(k) S(k), with S(k) = 1 when program
/// k would be actuated. Throws SpaceTooLarge past max_outcomes.
double oracle_undetected_probability(const Scenario& scenario, std::size_t max_outcomes = 1'000'000);

/// Program delivered by a misrouted entry: same order, another patient.
InfusionProgram routed_program(const InfusionProgram& intended);

}  // namespace ivc
