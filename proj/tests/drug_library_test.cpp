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

#include <random>

#include "ivc/drug_library.hpp"
#include "ivc/errors.hpp"
#include "test_support.hpp"

using namespace ivc;
using namespace ivc::testing;

namespace {

std::string doc_with(const std::string& entries) {
  return R"({"version": 4, "entries": [)" + entries + "]}";
}

std::string entry_json(const std::string& drug, const std::string& area, const std::string& dose) {
  return R"({"drug_id": ")" + drug + R"(", "drug_name": "x", "care_area": ")" + area +
         R"(", "dosing_unit": "mg_per_kg_per_h", "concentration_mg_per_ml": 2,
             "dose_limits": )" + dose + R"(,
             "rate_limits_ml_per_h": {"hard_min": 0, "soft_min": 1, "soft_max": 50, "hard_max": 100}})";
}

const std::string kBand0_1_5_10 = R"({"hard_min": 0, "soft_min": 1, "soft_max": 5, "hard_max": 10})";

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::MalformedDocument;
}

InfusionProgram per_kg(double dose, double rate = 10) {
  InfusionProgram p = program(dose, rate, 20, "D2");
  p.dose_unit = DosingUnit::MgPerKgPerH;
  return p;
}

}  // namespace

TEST(ParseLibrary, SingleEntryKeepsVersion) {
  const auto lib = parse_library(doc_with(entry_json("D1", "ICU", kBand0_1_5_10)));
  ASSERT_EQ(lib.entries().size(), 1u);
  EXPECT_EQ(lib.version(), 4);
  EXPECT_EQ(lib.entries()[0].dose_limits, band(0, 1, 5, 10));
  EXPECT_EQ(lib.digest().size(), 64u);
}

TEST(ParseLibrary, SoftMinAboveSoftMaxRejected) {
  const std::string bad = R"({"hard_min": 0, "soft_min": 6, "soft_max": 5, "hard_max": 10})";
  EXPECT_EQ(code_of([&] { parse_library(doc_with(entry_json("D1", "ICU", bad))); }),
            ErrorCode::LimitOrderViolation);
}

TEST(ParseLibrary, DuplicateKeyRejected) {
  const auto e = entry_json("D1", "ICU", kBand0_1_5_10);
  EXPECT_EQ(code_of([&] { parse_library(doc_with(e + "," + e)); }), ErrorCode::DuplicateEntry);
}

TEST(ParseLibrary, SameDrugOtherAreaAllowed) {
  const auto lib = parse_library(
      doc_with(entry_json("D1", "ICU", kBand0_1_5_10) + "," + entry_json("D1", "Oncology", kBand0_1_5_10)));
  EXPECT_EQ(lib.entries().size(), 2u);
}

TEST(ParseLibrary, RejectsNonPositiveConcentrationAndGarbage) {
  auto e = small_library().entries();
  e[0].concentration_mg_per_ml = 0.0;
  EXPECT_EQ(code_of([&] { DrugLibrary(1, e); }), ErrorCode::NonPositiveConcentration);
  EXPECT_EQ(code_of([] { parse_library("{not json"); }), ErrorCode::MalformedDocument);
  EXPECT_EQ(code_of([] { parse_library(R"({"entries": []})"); }), ErrorCode::MalformedDocument);
}

TEST(ParseLibrary, DigestFieldIsChecked) {
  const auto lib = small_library();
  auto doc = to_json(lib);
  doc["digest"] = lib.digest();
  EXPECT_EQ(parse_library(doc.dump()).digest(), lib.digest());
  doc["digest"] = std::string(64, '0');
  EXPECT_EQ(code_of([&] { parse_library(doc.dump()); }), ErrorCode::MalformedDocument);
}

TEST(ParseLibrary, RoundTripIsIdentity) {
  const auto text = read_file(IVC_DATA_DIR "/library.json");
  const auto lib = parse_library(text);
  const auto once = serialize_library(lib);
  const auto again = parse_library(once);
  EXPECT_EQ(serialize_library(again), once);
  EXPECT_EQ(again.digest(), lib.digest());
  EXPECT_EQ(again.entries(), lib.entries());
}

TEST(Lookup, FindsAndMisses) {
  const auto lib = small_library();
  EXPECT_EQ(lookup(lib, "D1", "ICU").drug_id, "D1");
  EXPECT_EQ(code_of([&] { lookup(lib, "D1", "Oncology"); }), ErrorCode::EntryNotFound);
  EXPECT_EQ(code_of([] { lookup(DrugLibrary{}, "D1", "ICU"); }), ErrorCode::EntryNotFound);
}

TEST(CheckProgram, SoftAndHardBands) {
  const auto e = entry("D2", "ICU", DosingUnit::MgPerKgPerH, band(0, 1, 5, 10), band(0, 1, 50, 100));
  EXPECT_EQ(check_program(e, per_kg(3)).kind, VerdictKind::Pass);

  const auto soft = check_program(e, per_kg(7));
  EXPECT_EQ(soft.kind, VerdictKind::SoftViolation);
  ASSERT_EQ(soft.violations.size(), 1u);
  EXPECT_EQ(soft.violations[0], (Violation{"dose", 7, 5, "soft_max", Severity::Soft}));

  const auto hard = check_program(e, per_kg(12));
  EXPECT_EQ(hard.kind, VerdictKind::HardViolation);
  EXPECT_EQ(hard.violations[0], (Violation{"dose", 12, 10, "hard_max", Severity::Hard}));
}

TEST(CheckProgram, HardDominatesAndListsRate) {
  const auto e = entry("D2", "ICU", DosingUnit::MgPerKgPerH, band(0, 1, 5, 10), band(0, 1, 50, 100));
  const auto v = check_program(e, per_kg(7, 150));
  EXPECT_EQ(v.kind, VerdictKind::HardViolation);
  ASSERT_EQ(v.violations.size(), 2u);
  EXPECT_EQ(v.violations[1].field, "rate");
  EXPECT_EQ(v.violations[1].severity, Severity::Hard);
}

TEST(CheckProgram, BoundsAreInclusive) {
  const auto e = entry("D2", "ICU", DosingUnit::MgPerKgPerH, band(0.5, 1, 5, 10), band(0, 1, 50, 100));
  for (double d : {1.0, 5.0}) EXPECT_EQ(check_program(e, per_kg(d)).kind, VerdictKind::Pass) << d;
  for (double d : {0.5, 10.0}) EXPECT_EQ(check_program(e, per_kg(d)).kind, VerdictKind::SoftViolation) << d;
  // Values are compared after rounding to 6 significant figures.
  EXPECT_EQ(check_program(e, per_kg(std::nextafter(10.0, 11.0))).kind, VerdictKind::SoftViolation);
  EXPECT_EQ(check_program(e, per_kg(10.0001)).kind, VerdictKind::HardViolation);
  EXPECT_EQ(check_program(e, per_kg(0.4)).kind, VerdictKind::HardViolation);
  EXPECT_EQ(check_program(e, per_kg(3, 50)).kind, VerdictKind::Pass);
}

TEST(CheckProgram, NormalizesByWeight) {
  const auto e = entry("D2", "ICU", DosingUnit::MgPerKgPerH, band(0, 1, 5, 10));
  auto p = per_kg(0);
  p.dose_unit = DosingUnit::MgPerH;
  p.dose_value = 210;  // 3 mg/kg/h at 70 kg
  EXPECT_DOUBLE_EQ(normalized_dose(e, p), 3.0);
  EXPECT_EQ(check_program(e, p).kind, VerdictKind::Pass);
  p.patient_weight_kg.reset();
  EXPECT_EQ(code_of([&] { check_program(e, p); }), ErrorCode::MissingWeight);
  p.dose_unit = DosingUnit::MlPerH;
  p.patient_weight_kg = 70;
  EXPECT_EQ(code_of([&] { check_program(e, p); }), ErrorCode::UnitMismatch);
  p.drug_id = "D1";
  EXPECT_EQ(code_of([&] { check_program(e, p); }), ErrorCode::DrugMismatch);
}

// Classification agrees with a direct reading of the band for random values.
TEST(CheckProgram, RandomValuesMatchBandReading) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 15.0);
  const LimitBand b = band(1, 2, 6, 9);
  const auto e = entry("D2", "ICU", DosingUnit::MgPerKgPerH, b, band(0, 0, 1000, 1000));
  for (int i = 0; i < 2000; ++i) {
    const double d = round_significant(u(rng), 6);
    VerdictKind expect = VerdictKind::Pass;
    if (d < b.hard_min || d > b.hard_max) {
      expect = VerdictKind::HardViolation;
    } else if (d < b.soft_min || d > b.soft_max) {
      expect = VerdictKind::SoftViolation;
    }
    ASSERT_EQ(check_program(e, per_kg(d)).kind, expect) << d;
  }
}
