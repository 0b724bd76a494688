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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivc/canonical_json.hpp"

namespace ivc {

enum class DosingUnit { MgPerKgPerH, MgPerH, MlPerH };

std::string_view to_string(DosingUnit unit);
DosingUnit dosing_unit_from_string(std::string_view text);

/// Rounds to the given number of significant figures. All limit and
/// concurrence comparisons happen on values rounded to six.
double round_significant(double value, int digits = 6);

/// The parameters an operator keys into the pump.
struct InfusionProgram {
  std::string patient_id;
  std::string drug_id;
  std::string care_area;
  double dose_value = 0.0;
  DosingUnit dose_unit = DosingUnit::MgPerH;
  double rate_ml_per_h = 0.0;
  double vtbi_ml = 0.0;
  std::optional<double> patient_weight_kg;

  friend bool operator==(const InfusionProgram&, const InfusionProgram&) = default;
};

/// Throws Error(InvalidProgram) unless dose, rate and VTBI are finite and
/// strictly positive and the weight, when present, is positive.
void validate_program(const InfusionProgram& program);

/// Unit-normalized, rounded form used for concurrence comparison. Per-kg
/// doses are multiplied out to mg/h when the weight is known.
InfusionProgram canonicalize(const InfusionProgram& program);

/// Names of the fields on which two programs differ after canonicalization,
/// in declaration order.
std::vector<std::string> program_diff(const InfusionProgram& a, const InfusionProgram& b);

Json to_json(const InfusionProgram& program);
InfusionProgram program_from_json(const Json& doc);

enum class Role { Commanding, Executive };

std::string_view to_string(Role role);

struct Operator {
  std::string operator_id;
  Role role = Role::Executive;

  friend bool operator==(const Operator&, const Operator&) = default;
};

}  // namespace ivc
