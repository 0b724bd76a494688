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

Scenario one_digit(std::int64_t nx, std::int64_t ny, LimitBand dose_band) {
  Scenario s;
  s.library = DrugLibrary(1, {entry("D1", "ICU", DosingUnit::MgPerH, dose_band),
                              entry("D2", "ICU", DosingUnit::MgPerH, dose_band)});
  s.intended = program(5, 5, 2.5);
  s.operator_x.n = nx;
  s.operator_x.fields = {ProgramField::Dose};
  s.operator_y = s.operator_x;
  s.operator_y.n = ny;
  s.trials = 1;
  return s;
}

// Hand count for a single one-digit dose field under substitution only:
// each of the 9 replacement digits is equally likely (q = 1/9), and an
// outcome counts when it is a usable dose that the band does not hard-block.
double hand_oracle(double px, double py, LimitBand b, bool soft_survives) {
  double sum = 0.0;
  for (int d = 0; d <= 9; ++d) {
    if (d == 5) continue;
    bool survives = d > 0 && d >= b.hard_min && d <= b.hard_max;
    if (d < b.soft_min || d > b.soft_max) survives = survives && soft_survives;
    if (survives) sum += (1.0 / 9.0) * (1.0 / 9.0);
  }
  return px * py * sum;
}

}  // namespace

TEST(Oracle, SingleDigitFieldHandEnumeration) {
  const LimitBand wide = band(0, 0, 100, 100);
  const auto s = one_digit(20, 20, wide);
  // Digit 0 leaves no dose at all, so 8 of the 9 outcomes can be actuated.
  EXPECT_NEAR(oracle_undetected_probability(s), hand_oracle(0.05, 0.05, wide, true), 1e-15);
  EXPECT_NEAR(oracle_undetected_probability(s), 0.05 * 0.05 * 8.0 / 81.0, 1e-15);
}

TEST(Oracle, ShippedLibraryBand) {
  const LimitBand b = band(1, 2, 7, 8);
  auto s = one_digit(20, 20, b);
  EXPECT_NEAR(oracle_undetected_probability(s), hand_oracle(0.05, 0.05, b, true), 1e-15);
  EXPECT_NEAR(oracle_undetected_probability(s), 0.0025 * 7.0 / 81.0, 1e-15);
  s.override_policy = OverridePolicy::RefuseAll;
  EXPECT_NEAR(oracle_undetected_probability(s), hand_oracle(0.05, 0.05, b, false), 1e-15);
}

TEST(Oracle, AsymmetricOperators) {
  const LimitBand b = band(1, 2, 7, 8);
  const auto s = one_digit(4, 50, b);
  EXPECT_NEAR(oracle_undetected_probability(s), hand_oracle(0.25, 0.02, b, true), 1e-15);
}

TEST(Oracle, NeverExceedsJointErrorProbability) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    auto s = one_digit(1 + static_cast<std::int64_t>(rng() % 30), 1 + static_cast<std::int64_t>(rng() % 30),
                       band(0.1, 1, 20, 40));
    std::array<double, kCorruptionKinds> w{};
    double total = 0.0;
    for (auto& x : w) total += (x = static_cast<double>(rng() % 5));
    if (total == 0.0) w[0] = total = 1.0;
    for (auto& x : w) x /= total;
    s.operator_x.taxonomy = s.operator_y.taxonomy = w;
    s.operator_x.fields = s.operator_y.fields = {ProgramField::Dose, ProgramField::Rate, ProgramField::Vtbi};
    s.intended = program(12.5, 3.75, 250);
    const double p = oracle_undetected_probability(s);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, s.operator_x.error_probability() * s.operator_y.error_probability() + 1e-18);
  }
}

TEST(Oracle, VanishesWithErrorProbability) {
  const auto s = one_digit(1'000'000'000'000, 20, band(0, 0, 100, 100));
  EXPECT_LT(oracle_undetected_probability(s), 1e-13);
}

TEST(Oracle, SingleOperatorValue) {
  const LimitBand b = band(1, 2, 7, 8);
  auto s = one_digit(20, 20, b);
  s.mode = Mode::SingleOperator;
  // 7 of 9 substitutes survive DERS.
  EXPECT_NEAR(oracle_undetected_probability(s), 0.05 * 7.0 / 9.0, 1e-15);
}

TEST(Oracle, SpaceTooLarge) {
  auto s = one_digit(2, 2, band(0, 0, 1e9, 1e9));
  s.operator_x.fields = {ProgramField::Dose, ProgramField::Rate, ProgramField::Vtbi};
  s.operator_y.fields = s.operator_x.fields;
  s.intended = program(123456.5, 654321.25, 999999.125);
  try {
    oracle_undetected_probability(s, 10);
    FAIL() << "expected SpaceTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpaceTooLarge);
  }
}

// Monte Carlo agrees with the closed form on a mixed taxonomy where mismatch
// catches most errors.
TEST(Oracle, AgreesWithSimulationOnMixedTaxonomy) {
  auto s = one_digit(2, 2, band(0.1, 1, 20, 40));
  s.operator_x.taxonomy = {0.4, 0.1, 0.3, 0.1, 0.1};
  s.operator_x.fields = {ProgramField::Dose, ProgramField::Rate};
  s.operator_y = s.operator_x;
  s.intended = program(12.5, 3, 2.5);
  s.trials = 200000;
  s.seed = 17;
  const auto r = run_monte_carlo(s).report;
  ASSERT_TRUE(r.oracle_undetected);
  const double p = *r.oracle_undetected;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(s.trials));
  EXPECT_NEAR(r.rate(TrialOutcome::UndetectedErrorActuated), p, 4 * sigma) << "oracle " << p;
  EXPECT_EQ(r.invariant_violations, 0u);
}
