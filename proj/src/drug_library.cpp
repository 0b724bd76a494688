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

#include "ivc/drug_library.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include "ivc/errors.hpp"

namespace ivc {

namespace {

std::string key_of(const DrugLibraryEntry& e) { return e.drug_id + "/" + e.care_area; }

bool key_less(const DrugLibraryEntry& a, const DrugLibraryEntry& b) {
  return std::tie(a.drug_id, a.care_area) < std::tie(b.drug_id, b.care_area);
}

void validate_band(const LimitBand& b, const DrugLibraryEntry& e, std::string_view which) {
  const double values[] = {b.hard_min, b.soft_min, b.soft_max, b.hard_max};
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorCode::LimitOrderViolation,
                  key_of(e) + " " + std::string(which) + " has a negative or non-finite bound");
  }
  if (!(b.hard_min <= b.soft_min && b.soft_min <= b.soft_max && b.soft_max <= b.hard_max))
    throw Error(ErrorCode::LimitOrderViolation,
                key_of(e) + " " + std::string(which) + " is not ordered hard_min <= soft_min <= "
                                                       "soft_max <= hard_max");
}

LimitBand band_from_json(const Json& j) {
  return LimitBand{j.at("hard_min").get<double>(), j.at("soft_min").get<double>(),
                   j.at("soft_max").get<double>(), j.at("hard_max").get<double>()};
}

Json band_to_json(const LimitBand& b) {
  return {{"hard_min", b.hard_min},
          {"soft_min", b.soft_min},
          {"soft_max", b.soft_max},
          {"hard_max", b.hard_max}};
}

// Classifies one normalized field value against a band and appends at most
// one violation (the hard one when both bands are crossed).
void classify(std::string_view field, double value, const LimitBand& band,
              std::vector<Violation>& out) {
  if (value < band.hard_min) {
    out.push_back({std::string(field), value, band.hard_min, "hard_min", Severity::Hard});
  } else if (value > band.hard_max) {
    out.push_back({std::string(field), value, band.hard_max, "hard_max", Severity::Hard});
  } else if (value < band.soft_min) {
    out.push_back({std::string(field), value, band.soft_min, "soft_min", Severity::Soft});
  } else if (value > band.soft_max) {
    out.push_back({std::string(field), value, band.soft_max, "soft_max", Severity::Soft});
  }
}

}  // namespace

DrugLibrary::DrugLibrary(std::int64_t version, std::vector<DrugLibraryEntry> entries)
    : version_(version), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!(std::isfinite(e.concentration_mg_per_ml) && e.concentration_mg_per_ml > 0.0))
      throw Error(ErrorCode::NonPositiveConcentration, key_of(e));
    validate_band(e.dose_limits, e, "dose_limits");
    validate_band(e.rate_limits_ml_per_h, e, "rate_limits_ml_per_h");
  }
  std::stable_sort(entries_.begin(), entries_.end(), key_less);
  auto dup = std::adjacent_find(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.drug_id == b.drug_id && a.care_area == b.care_area;
  });
  if (dup != entries_.end()) throw Error(ErrorCode::DuplicateEntry, key_of(*dup));
  digest_ = sha256_hex(serialize_library(*this));
}

std::vector<std::string> DrugLibrary::drug_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : entries_)
    if (ids.empty() || ids.back() != e.drug_id) ids.push_back(e.drug_id);
  return ids;
}

DrugLibrary library_from_json(const Json& doc) {
  std::int64_t version = 0;
  std::vector<DrugLibraryEntry> entries;
  std::optional<std::string> stored_digest;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "top level must be an object");
    version = doc.at("version").get<std::int64_t>();
    for (const auto& j : doc.at("entries")) {
      DrugLibraryEntry e;
      e.drug_id = j.at("drug_id").get<std::string>();
      e.drug_name = j.at("drug_name").get<std::string>();
      e.care_area = j.at("care_area").get<std::string>();
      e.dosing_unit = dosing_unit_from_string(j.at("dosing_unit").get<std::string>());
      e.concentration_mg_per_ml = j.at("concentration_mg_per_ml").get<double>();
      e.dose_limits = band_from_json(j.at("dose_limits"));
      e.rate_limits_ml_per_h = band_from_json(j.at("rate_limits_ml_per_h"));
      entries.push_back(std::move(e));
    }
    if (auto it = doc.find("digest"); it != doc.end()) stored_digest = it->get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  DrugLibrary library(version, std::move(entries));
  if (stored_digest && *stored_digest != library.digest())
    throw Error(ErrorCode::MalformedDocument, "stored digest does not match content");
  return library;
}

DrugLibrary parse_library(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  return library_from_json(doc);
}

Json to_json(const DrugLibrary& library) {
  Json entries = Json::array();
  for (const auto& e : library.entries()) {
    entries.push_back({
        {"drug_id", e.drug_id},
        {"drug_name", e.drug_name},
        {"care_area", e.care_area},
        {"dosing_unit", std::string(to_string(e.dosing_unit))},
        {"concentration_mg_per_ml", e.concentration_mg_per_ml},
        {"dose_limits", band_to_json(e.dose_limits)},
        {"rate_limits_ml_per_h", band_to_json(e.rate_limits_ml_per_h)},
    });
  }
  return {{"version", library.version()}, {"entries", std::move(entries)}};
}

std::string serialize_library(const DrugLibrary& library) { return canonical_dump(to_json(library)); }

const DrugLibraryEntry& lookup(const DrugLibrary& library, std::string_view drug_id,
                               std::string_view care_area) {
  const auto& entries = library.entries();
  auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{drug_id, care_area},
                             [](const DrugLibraryEntry& e, const auto& key) {
                               return std::pair<std::string_view, std::string_view>(
                                          e.drug_id, e.care_area) < key;
                             });
  if (it == entries.end() || it->drug_id != drug_id || it->care_area != care_area)
    throw Error(ErrorCode::EntryNotFound, std::string(drug_id) + "/" + std::string(care_area));
  return *it;
}

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Pass: return "Pass";
    case VerdictKind::SoftViolation: return "SoftViolation";
    case VerdictKind::HardViolation: return "HardViolation";
  }
  return "?";
}

Json to_json(const DersVerdict& verdict) {
  Json violations = Json::array();
  for (const auto& v : verdict.violations) {
    violations.push_back({{"field", v.field},
                          {"value", v.value},
                          {"bound", v.bound},
                          {"bound_name", v.bound_name},
                          {"severity", v.severity == Severity::Hard ? "hard" : "soft"}});
  }
  return {{"verdict", std::string(to_string(verdict.kind))}, {"violations", std::move(violations)}};
}

double normalized_dose(const DrugLibraryEntry& entry, const InfusionProgram& program) {
  if (program.drug_id != entry.drug_id)
    throw Error(ErrorCode::DrugMismatch, program.drug_id + " vs " + entry.drug_id);
  const bool weight_ok = program.patient_weight_kg && *program.patient_weight_kg > 0.0;
  if (entry.dosing_unit == DosingUnit::MgPerKgPerH && !weight_ok)
    throw Error(ErrorCode::MissingWeight, entry.drug_id);

  double dose = program.dose_value;
  if (program.dose_unit != entry.dosing_unit) {
    if (program.dose_unit == DosingUnit::MgPerKgPerH && entry.dosing_unit == DosingUnit::MgPerH) {
      if (!weight_ok) throw Error(ErrorCode::MissingWeight, entry.drug_id);
      dose *= *program.patient_weight_kg;
    } else if (program.dose_unit == DosingUnit::MgPerH &&
               entry.dosing_unit == DosingUnit::MgPerKgPerH) {
      dose /= *program.patient_weight_kg;
    } else {
      throw Error(ErrorCode::UnitMismatch, std::string(to_string(program.dose_unit)) + " vs " +
                                               std::string(to_string(entry.dosing_unit)));
    }
  }
  return round_significant(dose);
}

DersVerdict check_program(const DrugLibraryEntry& entry, const InfusionProgram& program) {
  const double dose = normalized_dose(entry, program);
  const double rate = round_significant(program.rate_ml_per_h);

  DersVerdict verdict;
  classify("dose", dose, entry.dose_limits, verdict.violations);
  classify("rate", rate, entry.rate_limits_ml_per_h, verdict.violations);

  const bool any_hard = std::any_of(verdict.violations.begin(), verdict.violations.end(),
                                    [](const Violation& v) { return v.severity == Severity::Hard; });
  if (any_hard) {
    verdict.kind = VerdictKind::HardViolation;
  } else if (!verdict.violations.empty()) {
    verdict.kind = VerdictKind::SoftViolation;
  }
  return verdict;
}

}  // namespace ivc
