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

#include "ivc/program.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "ivc/errors.hpp"

namespace ivc {

std::string_view to_string(DosingUnit unit) {
  switch (unit) {
    case DosingUnit::MgPerKgPerH: return "mg_per_kg_per_h";
    case DosingUnit::MgPerH: return "mg_per_h";
    case DosingUnit::MlPerH: return "mL_per_h";
  }
  return "?";
}

DosingUnit dosing_unit_from_string(std::string_view text) {
  if (text == "mg_per_kg_per_h") return DosingUnit::MgPerKgPerH;
  if (text == "mg_per_h") return DosingUnit::MgPerH;
  if (text == "mL_per_h" || text == "ml_per_h") return DosingUnit::MlPerH;
  throw Error(ErrorCode::MalformedDocument, "unknown dosing unit '" + std::string(text) + "'");
}

double round_significant(double value, int digits) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

void validate_program(const InfusionProgram& p) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(p.dose_value)) throw Error(ErrorCode::InvalidProgram, "dose must be positive");
  if (!positive(p.rate_ml_per_h)) throw Error(ErrorCode::InvalidProgram, "rate must be positive");
  if (!positive(p.vtbi_ml)) throw Error(ErrorCode::InvalidProgram, "vtbi must be positive");
  if (p.patient_weight_kg && !positive(*p.patient_weight_kg))
    throw Error(ErrorCode::InvalidProgram, "weight must be positive when present");
}

InfusionProgram canonicalize(const InfusionProgram& program) {
  InfusionProgram c = program;
  if (c.dose_unit == DosingUnit::MgPerKgPerH && c.patient_weight_kg && *c.patient_weight_kg > 0) {
    c.dose_value = c.dose_value * *c.patient_weight_kg;
    c.dose_unit = DosingUnit::MgPerH;
  }
  c.dose_value = round_significant(c.dose_value);
  c.rate_ml_per_h = round_significant(c.rate_ml_per_h);
  c.vtbi_ml = round_significant(c.vtbi_ml);
  if (c.patient_weight_kg) c.patient_weight_kg = round_significant(*c.patient_weight_kg);
  return c;
}

std::vector<std::string> program_diff(const InfusionProgram& a, const InfusionProgram& b) {
  const InfusionProgram ca = canonicalize(a);
  const InfusionProgram cb = canonicalize(b);
  std::vector<std::string> diff;
  if (ca.patient_id != cb.patient_id) diff.emplace_back("patient_id");
  if (ca.drug_id != cb.drug_id) diff.emplace_back("drug_id");
  if (ca.care_area != cb.care_area) diff.emplace_back("care_area");
  if (ca.dose_value != cb.dose_value || ca.dose_unit != cb.dose_unit) diff.emplace_back("dose");
  if (ca.rate_ml_per_h != cb.rate_ml_per_h) diff.emplace_back("rate");
  if (ca.vtbi_ml != cb.vtbi_ml) diff.emplace_back("vtbi");
  if (ca.patient_weight_kg != cb.patient_weight_kg) diff.emplace_back("patient_weight");
  return diff;
}

Json to_json(const InfusionProgram& p) {
  Json j = {
      {"patient_id", p.patient_id},
      {"drug_id", p.drug_id},
      {"care_area", p.care_area},
      {"dose_value", p.dose_value},
      {"dose_unit", std::string(to_string(p.dose_unit))},
      {"rate_ml_per_h", p.rate_ml_per_h},
      {"vtbi_ml", p.vtbi_ml},
  };
  if (p.patient_weight_kg) j["patient_weight_kg"] = *p.patient_weight_kg;
  return j;
}

InfusionProgram program_from_json(const Json& doc) {
  try {
    InfusionProgram p;
    p.patient_id = doc.at("patient_id").get<std::string>();
    p.drug_id = doc.at("drug_id").get<std::string>();
    p.care_area = doc.at("care_area").get<std::string>();
    p.dose_value = doc.at("dose_value").get<double>();
    p.dose_unit = dosing_unit_from_string(doc.at("dose_unit").get<std::string>());
    p.rate_ml_per_h = doc.at("rate_ml_per_h").get<double>();
    p.vtbi_ml = doc.at("vtbi_ml").get<double>();
    if (auto it = doc.find("patient_weight_kg"); it != doc.end() && !it->is_null())
      p.patient_weight_kg = it->get<double>();
    return p;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("infusion program: ") + e.what());
  }
}

std::string_view to_string(Role role) {
  return role == Role::Commanding ? "Commanding" : "Executive";
}

}  // namespace ivc
