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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ivc/program.hpp"

namespace ivc {

/// Inclusive limit bands, hard_min <= soft_min <= soft_max <= hard_max.
struct LimitBand {
  double hard_min = 0.0;
  double soft_min = 0.0;
  double soft_max = 0.0;
  double hard_max = 0.0;

  friend bool operator==(const LimitBand&, const LimitBand&) = default;
};

struct DrugLibraryEntry {
  std::string drug_id;
  std::string drug_name;
  std::string care_area;
  DosingUnit dosing_unit = DosingUnit::MgPerH;
  double concentration_mg_per_ml = 1.0;
  LimitBand dose_limits;
  LimitBand rate_limits_ml_per_h;

  friend bool operator==(const DrugLibraryEntry&, const DrugLibraryEntry&) = default;
};

/// Immutable after parse. Entries are held sorted by (drug_id, care_area).
class DrugLibrary {
 public:
  DrugLibrary() = default;

  /// Validates and builds a library. Throws Error with LimitOrderViolation,
  /// DuplicateEntry or NonPositiveConcentration.
  DrugLibrary(std::int64_t version, std::vector<DrugLibraryEntry> entries);

  std::int64_t version() const noexcept { return version_; }
  const std::vector<DrugLibraryEntry>& entries() const noexcept { return entries_; }
  const std::string& digest() const noexcept { return digest_; }

  /// Distinct drug ids, ascending.
  std::vector<std::string> drug_ids() const;

 private:
  std::int64_t version_ = 0;
  std::vector<DrugLibraryEntry> entries_;
  std::string digest_;
};

DrugLibrary parse_library(std::string_view text);
DrugLibrary library_from_json(const Json& doc);
Json to_json(const DrugLibrary& library);

/// Canonical bytes that the library digest is computed over.
std::string serialize_library(const DrugLibrary& library);

/// Throws Error(EntryNotFound) when no entry matches.
const DrugLibraryEntry& lookup(const DrugLibrary& library, std::string_view drug_id,
                               std::string_view care_area);

enum class Severity { Soft, Hard };

struct Violation {
  std::string field;  // "dose" or "rate"
  double value = 0.0;
  double bound = 0.0;
  std::string bound_name;  // e.g. "soft_max"
  Severity severity = Severity::Soft;

  friend bool operator==(const Violation&, const Violation&) = default;
};

enum class VerdictKind { Pass, SoftViolation, HardViolation };

std::string_view to_string(VerdictKind kind);

struct DersVerdict {
  VerdictKind kind = VerdictKind::Pass;
  std::vector<Violation> violations;

  bool passed() const noexcept { return kind == VerdictKind::Pass; }
  friend bool operator==(const DersVerdict&, const DersVerdict&) = default;
};

Json to_json(const DersVerdict& verdict);

/// Dose expressed in the entry's dosing unit, rounded to six significant
/// figures. Throws MissingWeight, UnitMismatch or DrugMismatch.
double normalized_dose(const DrugLibraryEntry& entry, const InfusionProgram& program);

/// DERS check of dose and rate against the entry's bands.
DersVerdict check_program(const DrugLibraryEntry& entry, const InfusionProgram& program);

}  // namespace ivc
