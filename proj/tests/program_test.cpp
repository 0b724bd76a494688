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

#include "ivc/canonical_json.hpp"
#include "ivc/errors.hpp"
#include "ivc/program.hpp"
#include "test_support.hpp"

using namespace ivc;
using namespace ivc::testing;

TEST(RoundSignificant, SixDigits) {
  EXPECT_EQ(round_significant(1.23456789), 1.23457);
  EXPECT_EQ(round_significant(123456789.0), 123457000.0);
  EXPECT_EQ(round_significant(0.0), 0.0);
  EXPECT_EQ(round_significant(12.5), 12.5);
}

TEST(Canonicalize, EquivalentUnitsCompareEqual) {
  auto a = program(210, 5);
  auto b = program(3, 5);
  b.dose_unit = DosingUnit::MgPerKgPerH;
  EXPECT_TRUE(program_diff(a, b).empty());
  b.dose_value = 3.0000001;  // lost in rounding
  EXPECT_TRUE(program_diff(a, b).empty());
  b.dose_value = 3.001;
  EXPECT_EQ(program_diff(a, b), std::vector<std::string>{"dose"});
}

TEST(Canonicalize, DiffNamesEveryField) {
  auto a = program();
  auto b = a;
  b.patient_id = "PT-2";
  b.vtbi_ml = 9;
  b.patient_weight_kg.reset();
  EXPECT_EQ(program_diff(a, b), (std::vector<std::string>{"patient_id", "vtbi", "patient_weight"}));
}

TEST(Program, JsonRoundTripAndValidation) {
  auto p = program(12.5, 3, 40);
  EXPECT_EQ(program_from_json(to_json(p)), p);
  p.patient_weight_kg.reset();
  EXPECT_EQ(program_from_json(to_json(p)), p);
  p.rate_ml_per_h = 0;
  EXPECT_THROW(validate_program(p), Error);
  p.rate_ml_per_h = NAN;
  EXPECT_THROW(validate_program(p), Error);
}

TEST(CanonicalJson, SortedCompactShortest) {
  const Json j = {{"b", 0.1}, {"a", {{"y", 1}, {"x", "q\"\n"}}}, {"c", Json::array({true, nullptr})}};
  EXPECT_EQ(canonical_dump(j), R"({"a":{"x":"q\"\n","y":1},"b":0.1,"c":[true,null]})");
  EXPECT_EQ(canonical_dump(Json(1e-7)), "1e-07");
  EXPECT_EQ(shortest_fixed(12.5), "12.5");
  EXPECT_EQ(shortest_fixed(100.0), "100");
  EXPECT_THROW(canonical_dump(Json(INFINITY)), std::domain_error);
}

TEST(CanonicalJson, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
