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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "ivc/errors.hpp"
#include "ivc/simulator.hpp"

namespace ivc {

namespace {

constexpr std::array<std::string_view, kCorruptionKinds> kKindNames = {
    "DigitSubstitution", "AdjacentTransposition", "DoubleBounce", "WrongDrug", "WrongField"};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

bool field_has(CorruptionKind kind, const InfusionProgram& p, ProgramField f) {
  const std::string text = keypad::render(field_value(p, f));
  if (kind == CorruptionKind::AdjacentTransposition)
    return !keypad::transposable_positions(text).empty();
  return !keypad::digit_positions(text).empty();
}

std::vector<ProgramField> applicable_fields(CorruptionKind kind, const OperatorModel& model,
                                            const InfusionProgram& p) {
  std::vector<ProgramField> out;
  for (ProgramField f : model.fields)
    if (field_has(kind, p, f)) out.push_back(f);
  return out;
}

template <class T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

}  // namespace

std::string_view to_string(CorruptionKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

CorruptionKind corruption_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (text == kKindNames[i]) return static_cast<CorruptionKind>(i);
  throw Error(ErrorCode::InvalidScenario, "unknown corruption kind '" + std::string(text) + "'");
}

std::string_view to_string(ProgramField field) {
  switch (field) {
    case ProgramField::Dose: return "dose";
    case ProgramField::Rate: return "rate";
    case ProgramField::Vtbi: return "vtbi";
  }
  return "?";
}

ProgramField program_field_from_string(std::string_view text) {
  if (text == "dose") return ProgramField::Dose;
  if (text == "rate") return ProgramField::Rate;
  if (text == "vtbi") return ProgramField::Vtbi;
  throw Error(ErrorCode::InvalidScenario, "unknown program field '" + std::string(text) + "'");
}

double field_value(const InfusionProgram& p, ProgramField field) {
  switch (field) {
    case ProgramField::Dose: return p.dose_value;
    case ProgramField::Rate: return p.rate_ml_per_h;
    case ProgramField::Vtbi: return p.vtbi_ml;
  }
  return 0.0;
}

void set_field_value(InfusionProgram& p, ProgramField field, double value) {
  switch (field) {
    case ProgramField::Dose: p.dose_value = value; break;
    case ProgramField::Rate: p.rate_ml_per_h = value; break;
    case ProgramField::Vtbi: p.vtbi_ml = value; break;
  }
}

void validate(const OperatorModel& m) {
  if (m.n < 1) throw Error(ErrorCode::InvalidScenario, "operator n must be >= 1");
  double sum = 0.0;
  for (double w : m.taxonomy) {
    if (!(std::isfinite(w) && w >= 0.0))
      throw Error(ErrorCode::InvalidScenario, "taxonomy weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidScenario, "taxonomy weights must sum to 1");
  if (m.fields.empty()) throw Error(ErrorCode::InvalidScenario, "operator needs at least one keyed field");
  if (!(m.base_miss >= 0.0 && m.base_miss <= 1.0))
    throw Error(ErrorCode::InvalidScenario, "base_miss must lie in [0, 1]");
  if (!(std::isfinite(m.fatigue_c) && m.fatigue_c >= 0.0))
    throw Error(ErrorCode::InvalidScenario, "fatigue_c must be >= 0");
}

namespace keypad {

std::string render(double value) { return shortest_fixed(value); }

std::vector<std::size_t> digit_positions(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < text.size(); ++i)
    if (is_digit(text[i])) out.push_back(i);
  return out;
}

std::vector<std::size_t> transposable_positions(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < text.size(); ++i)
    if (is_digit(text[i]) && is_digit(text[i + 1]) && text[i] != text[i + 1]) out.push_back(i);
  return out;
}

std::string substitute(std::string_view text, std::size_t pos, char digit) {
  std::string out(text);
  out.at(pos) = digit;
  return out;
}

std::string transpose(std::string_view text, std::size_t pos) {
  std::string out(text);
  std::swap(out.at(pos), out.at(pos + 1));
  return out;
}

std::string double_bounce(std::string_view text, std::size_t pos) {
  std::string out(text);
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), out.at(pos));
  return out;
}

double parse(std::string_view text) { return std::strtod(std::string(text).c_str(), nullptr); }

}  // namespace keypad

bool corruption_applicable(CorruptionKind kind, const OperatorModel& model,
                           const InfusionProgram& intended, const DrugLibrary& library) {
  switch (kind) {
    case CorruptionKind::DigitSubstitution:
    case CorruptionKind::AdjacentTransposition:
    case CorruptionKind::DoubleBounce:
      return !applicable_fields(kind, model, intended).empty();
    case CorruptionKind::WrongDrug: {
      const auto ids = library.drug_ids();
      return std::any_of(ids.begin(), ids.end(), [&](const auto& id) { return id != intended.drug_id; });
    }
    case CorruptionKind::WrongField:
      return round_significant(intended.dose_value) != round_significant(intended.rate_ml_per_h);
  }
  return false;
}

InfusionProgram corrupt_entry(const OperatorModel& model, const InfusionProgram& intended,
                              const DrugLibrary& library, std::mt19937_64& rng) {
  if (uniform01(rng) >= model.error_probability()) return intended;

  // Resampling an inapplicable kind is the same as drawing from the weights
  // restricted to applicable kinds.
  std::array<double, kCorruptionKinds> weights{};
  for (std::size_t k = 0; k < kCorruptionKinds; ++k) {
    const auto kind = static_cast<CorruptionKind>(k);
    if (model.taxonomy[k] > 0.0 && corruption_applicable(kind, model, intended, library))
      weights[k] = model.taxonomy[k];
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  CorruptionKind kind = CorruptionKind::DigitSubstitution;
  if (total > 0.0) {
    double u = uniform01(rng) * total;
    for (std::size_t k = 0; k < kCorruptionKinds; ++k) {
      if (weights[k] <= 0.0) continue;
      kind = static_cast<CorruptionKind>(k);
      if (u < weights[k]) break;
      u -= weights[k];
    }
  }

  InfusionProgram out = intended;
  switch (kind) {
    case CorruptionKind::DigitSubstitution:
    case CorruptionKind::AdjacentTransposition:
    case CorruptionKind::DoubleBounce: {
      const auto fields = applicable_fields(kind, model, intended);
      if (fields.empty()) return intended;  // nothing keyed digit by digit
      const ProgramField field = pick(fields, rng);
      const std::string text = keypad::render(field_value(intended, field));
      std::string corrupted;
      if (kind == CorruptionKind::AdjacentTransposition) {
        corrupted = keypad::transpose(text, pick(keypad::transposable_positions(text), rng));
      } else {
        const std::size_t pos = pick(keypad::digit_positions(text), rng);
        if (kind == CorruptionKind::DoubleBounce) {
          corrupted = keypad::double_bounce(text, pos);
        } else {
          std::uniform_int_distribution<int> alt(0, 8);
          int d = alt(rng);
          if (d >= text[pos] - '0') ++d;  // skip the digit already there
          corrupted = keypad::substitute(text, pos, static_cast<char>('0' + d));
        }
      }
      set_field_value(out, field, keypad::parse(corrupted));
      break;
    }
    case CorruptionKind::WrongDrug: {
      std::vector<std::string> others;
      for (auto& id : library.drug_ids())
        if (id != intended.drug_id) others.push_back(id);
      out.drug_id = pick(others, rng);
      break;
    }
    case CorruptionKind::WrongField:
      std::swap(out.dose_value, out.rate_ml_per_h);
      break;
  }
  return out;
}

double miss_probability(double base_miss, double fatigue_c, std::uint64_t false_alarms_in_window) {
  return std::clamp(base_miss + fatigue_c * static_cast<double>(false_alarms_in_window), 0.0, 1.0);
}

}  // namespace ivc
