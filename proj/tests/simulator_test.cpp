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


#include <gtest/gtest.h>

#include <cmath>

#include "ivc/errors.hpp"
#include "ivc/simulator.hpp"
#include "test_support.hpp"

using namespace ivc;
using namespace ivc::testing;

namespace {

OperatorModel digits_on_dose(std::int64_t n) {
  OperatorModel m;
  m.n = n;
  m.taxonomy = {1, 0, 0, 0, 0};
  m.fields = {ProgramField::Dose};
  return m;
}

Scenario base_scenario(std::int64_t n = 20, std::uint64_t trials = 1000) {
  Scenario s;
  s.library = small_library();
  s.intended = program(5, 5, 2.5);
  s.operator_x = digits_on_dose(n);
  s.operator_y = digits_on_dose(n);
  s.commanding = digits_on_dose(n);
  s.trials = trials;
  s.seed = 42;
  return s;
}

TrialResult forced(const Scenario& s, const InfusionProgram& x, const std::optional<InfusionProgram>& y) {
  TrialStreams streams(s.seed, 0);
  return run_trial_with_entries(s, 0, x, y, streams);
}

}  // namespace

TEST(Keypad, DoubleBounceOnDose) {
  EXPECT_EQ(keypad::render(12.5), "12.5");
  EXPECT_EQ(keypad::double_bounce("12.5", 1), "122.5");
  EXPECT_EQ(keypad::parse(keypad::double_bounce(keypad::render(12.5), 1)), 122.5);
  EXPECT_EQ(keypad::transpose("12.5", 0), "21.5");
  EXPECT_EQ(keypad::transposable_positions("5"), std::vector<std::size_t>{});
  EXPECT_EQ(keypad::digit_positions("12.5"), (std::vector<std::size_t>{0, 1, 3}));
}

TEST(CorruptEntry, NEqualOneAlwaysErrs) {
  const auto s = base_scenario(1);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto out = corrupt_entry(s.operator_x, s.intended, s.library, rng);
    ASSERT_NE(out, s.intended);
    ASSERT_NE(out.dose_value, 5.0);
    ASSERT_EQ(out.rate_ml_per_h, 5.0);
  }
}

TEST(CorruptEntry, LargeNLeavesEntryAlone) {
  const auto s = base_scenario(1'000'000'000);
  std::mt19937_64 rng(5);
  int changed = 0;
  for (int i = 0; i < 10000; ++i) changed += corrupt_entry(s.operator_x, s.intended, s.library, rng) != s.intended;
  EXPECT_EQ(changed, 0);
}

TEST(CorruptEntry, SubstitutionIsUniformOverNineDigits) {
  const auto s = base_scenario(1);
  std::mt19937_64 rng(9);
  std::array<int, 10> seen{};
  const int draws = 90000;
  for (int i = 0; i < draws; ++i)
    ++seen[static_cast<int>(corrupt_entry(s.operator_x, s.intended, s.library, rng).dose_value)];
  EXPECT_EQ(seen[5], 0);
  for (int d = 0; d < 10; ++d)
    if (d != 5) EXPECT_NEAR(seen[d], draws / 9.0, 5 * std::sqrt(draws / 9.0)) << d;
}

TEST(CorruptEntry, FallsBackWhenNothingApplies) {
  // Transposition cannot act on one-digit values; substitution is used.
  auto s = base_scenario(1);
  s.operator_x.taxonomy = {0, 1, 0, 0, 0};
  std::mt19937_64 rng(1);
  EXPECT_FALSE(corruption_applicable(CorruptionKind::AdjacentTransposition, s.operator_x, s.intended, s.library));
  const auto out = corrupt_entry(s.operator_x, s.intended, s.library, rng);
  EXPECT_NE(out.dose_value, 5.0);
}

TEST(CorruptEntry, WrongDrugAndWrongField) {
  auto s = base_scenario(1);
  s.operator_x.taxonomy = {0, 0, 0, 1, 0};
  std::mt19937_64 rng(1);
  EXPECT_EQ(corrupt_entry(s.operator_x, s.intended, s.library, rng).drug_id, "D2");
  s.operator_x.taxonomy = {0, 0, 0, 0, 1};
  auto p = s.intended;
  p.rate_ml_per_h = 3;
  const auto out = corrupt_entry(s.operator_x, p, s.library, rng);
  EXPECT_EQ(out.dose_value, 3.0);
  EXPECT_EQ(out.rate_ml_per_h, 5.0);
}

TEST(MissProbability, LinearWithClamp) {
  EXPECT_EQ(miss_probability(0.01, 0.02, 0), 0.01);
  EXPECT_NEAR(miss_probability(0.01, 0.02, 3), 0.07, 1e-15);
  EXPECT_EQ(miss_probability(0.9, 0.1, 5), 1.0);
  double prev = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const double p = miss_probability(0.05, 0.013, k);
    ASSERT_GE(p, prev);
    prev = p;
  }
}

TEST(RunTrial, UncorruptedCompletes) {
  const auto s = base_scenario();
  const auto r = forced(s, s.intended, s.intended);
  EXPECT_EQ(r.outcome, TrialOutcome::CompletedCorrect);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_EQ(r.log.events().back().kind, CqiKind::Signed);
}

TEST(RunTrial, OneSidedErrorIsCaught) {
  const auto s = base_scenario();
  const auto r = forced(s, program(6, 5, 2.5), s.intended);
  EXPECT_EQ(r.outcome, TrialOutcome::CaughtByMismatch);
  EXPECT_FALSE(r.actuated);
}

TEST(RunTrial, IdenticalErrorsSlipThrough) {
  const auto s = base_scenario();
  const auto wrong = program(6, 5, 2.5);  // inside the soft band
  const auto r = forced(s, wrong, wrong);
  EXPECT_EQ(r.outcome, TrialOutcome::UndetectedErrorActuated);
  ASSERT_TRUE(r.actuated);
  EXPECT_EQ(*r.actuated, wrong);
  EXPECT_TRUE(r.violations.empty());
}

TEST(RunTrial, DersClassifiesAgreedErrors) {
  auto s = base_scenario();
  EXPECT_EQ(forced(s, program(9), program(9)).outcome, TrialOutcome::CaughtByDersHard);
  EXPECT_EQ(forced(s, program(7.5), program(7.5)).outcome, TrialOutcome::UndetectedErrorActuated);
  s.override_policy = OverridePolicy::RefuseAll;
  EXPECT_EQ(forced(s, program(7.5), program(7.5)).outcome, TrialOutcome::CaughtBySoftNoOverride);
  auto onc = program();
  onc.care_area = "Oncology";
  EXPECT_EQ(forced(s, onc, onc).outcome, TrialOutcome::HaltedNoLibraryEntry);
}

TEST(RunTrial, SingleOperatorActuatesAnySurvivingError) {
  auto s = base_scenario();
  s.mode = Mode::SingleOperator;
  EXPECT_EQ(forced(s, program(6), std::nullopt).outcome, TrialOutcome::UndetectedErrorActuated);
  EXPECT_EQ(forced(s, program(9), std::nullopt).outcome, TrialOutcome::CaughtByDersHard);
  EXPECT_EQ(forced(s, s.intended, std::nullopt).outcome, TrialOutcome::CompletedCorrect);
}

TEST(RunTrial, WrongPumpRouting) {
  auto s = base_scenario(1'000'000'000, 200);
  s.wrong_pump_routing_p = 1.0;
  auto r = run_monte_carlo(s).report;
  EXPECT_EQ(r.count(TrialOutcome::CaughtByMismatch), 200u);
  s.mode = Mode::SingleOperator;
  r = run_monte_carlo(s).report;
  EXPECT_EQ(r.count(TrialOutcome::UndetectedErrorActuated), 200u);
}

TEST(RunTrial, ScheduledAbortStopsInfusion) {
  auto s = base_scenario(1'000'000'000);
  s.intended = program(5, 5, 10);
  s.fault_schedule.push_back({0.5, AlarmKind::AirInLine, true, true});
  const auto r = run_trial(s, 0);
  EXPECT_EQ(r.outcome, TrialOutcome::AbortedByConcurrence);
  EXPECT_EQ(r.significant_alarms, 1u);
  EXPECT_TRUE(r.violations.empty());
}

TEST(MonteCarlo, SingleTrialCountsSumToOne) {
  const auto r = run_monte_carlo(base_scenario(20, 1)).report;
  std::uint64_t total = 0;
  for (auto c : r.counts) total += c;
  EXPECT_EQ(total, 1u);
}

TEST(MonteCarlo, DeterministicAndParallelMatchesSerial) {
  auto s = base_scenario(3, 3000);
  s.operator_x.taxonomy = {0.4, 0.1, 0.3, 0.1, 0.1};
  s.operator_x.fields = {ProgramField::Dose, ProgramField::Rate, ProgramField::Vtbi};
  s.operator_y = s.operator_x;
  s.false_alarm_rate = 0.2;
  s.fault_schedule.push_back({0.25, AlarmKind::Occlusion, true, false});
  RunOptions opt;
  opt.keep_outcomes = true;
  opt.keep_cqi_trials = 50;
  const auto a = run_monte_carlo(s, opt);
  const auto b = run_monte_carlo(s, opt);
  const auto c = run_monte_carlo_serial(s, opt);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.report, c.report);
  EXPECT_EQ(a.outcomes, c.outcomes);
  ASSERT_EQ(a.cqi_logs.size(), 50u);
  for (std::size_t i = 0; i < a.cqi_logs.size(); ++i) EXPECT_EQ(a.cqi_logs[i].events(), c.cqi_logs[i].events());
  EXPECT_EQ(a.report.invariant_violations, 0u) << (a.report.violation_samples.empty() ? "" : a.report.violation_samples[0]);
  EXPECT_EQ(canonical_dump(to_json(a.report)), canonical_dump(to_json(c.report)));
}

TEST(MonteCarlo, DifferentSeedsDiffer) {
  auto s = base_scenario(2, 2000);
  const auto a = run_monte_carlo(s).report;
  s.seed = 43;
  EXPECT_NE(a.counts, run_monte_carlo(s).report.counts);
}

TEST(Wilson, ContainsEstimate) {
  const auto ci = wilson_interval(25, 10000);
  EXPECT_LT(ci.low, 0.0025);
  EXPECT_GT(ci.high, 0.0025);
  const auto zero = wilson_interval(0, 100);
  EXPECT_EQ(zero.low, 0.0);
  EXPECT_GT(zero.high, 0.0);
}

TEST(Scenario, ParsesShippedFiles) {
  for (const char* name : {"scenario_concurrence.json", "scenario_single.json", "scenario_fatigue.json"}) {
    const auto s = parse_scenario(read_file(std::string(IVC_DATA_DIR "/") + name), IVC_DATA_DIR);
    EXPECT_GE(s.trials, 1u) << name;
    EXPECT_EQ(s.library.version(), 7) << name;
    // Round-trips through its own JSON form.
    const auto again = parse_scenario(to_json(s).dump());
    EXPECT_EQ(canonical_dump(to_json(again)), canonical_dump(to_json(s))) << name;
  }
}

TEST(Scenario, RejectsBadInput) {
  auto code = [](const std::string& text) {
    try {
      parse_scenario(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::MalformedDocument;
  };
  auto doc = to_json(base_scenario());
  EXPECT_NO_THROW(parse_scenario(doc.dump()));
  auto bad = doc;
  bad["trials"] = 0;
  EXPECT_EQ(code(bad.dump()), ErrorCode::InvalidScenario);
  bad = doc;
  bad["operator_x"]["taxonomy"] = {{"DigitSubstitution", 0.5}};
  EXPECT_EQ(code(bad.dump()), ErrorCode::InvalidScenario);
  bad = doc;
  bad["intended_program"]["dose_value"] = 9;  // intended itself breaks a hard limit
  EXPECT_EQ(code(bad.dump()), ErrorCode::InvalidScenario);
  EXPECT_EQ(code("{"), ErrorCode::InvalidScenario);
}
