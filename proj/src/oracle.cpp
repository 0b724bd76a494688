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

// Closed-form undetected-error probability. The enumeration below does its
// own string work instead of calling into keypad:: so that it stays an
// independent check on the sampler in corruption.cpp.

#include <cmath>
#include <cstdlib>
#include <map>

#include "ivc/errors.hpp"
#include "ivc/simulator.hpp"

namespace ivc {

namespace {

struct Outcome {
  InfusionProgram program;
  double probability = 0.0;
};

using Distribution = std::map<std::string, Outcome>;

class Enumerator {
 public:
  Enumerator(const InfusionProgram& intended, const DrugLibrary& library, std::size_t cap)
      : intended_(intended), library_(library), cap_(cap) {}

  // Distribution of the program an operator keys in given that one error
  // occurs.
  Distribution conditional(const OperatorModel& model) {
    std::array<double, kCorruptionKinds> w{};
    double total = 0.0;
    for (std::size_t k = 0; k < kCorruptionKinds; ++k) {
      if (model.taxonomy[k] > 0.0 && applicable(static_cast<CorruptionKind>(k), model)) {
        w[k] = model.taxonomy[k];
        total += w[k];
      }
    }
    if (total <= 0.0) {
      w = {};
      w[static_cast<std::size_t>(CorruptionKind::DigitSubstitution)] = 1.0;
      total = 1.0;
    }
    Distribution dist;
    for (std::size_t k = 0; k < kCorruptionKinds; ++k)
      if (w[k] > 0.0) expand(static_cast<CorruptionKind>(k), model, w[k] / total, dist);
    return dist;
  }

 private:
  static std::vector<std::size_t> digits(const std::string& s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= '0' && s[i] <= '9') out.push_back(i);
    return out;
  }

  static std::vector<std::size_t> pairs(const std::string& s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const bool both = s[i] >= '0' && s[i] <= '9' && s[i + 1] >= '0' && s[i + 1] <= '9';
      if (both && s[i] != s[i + 1]) out.push_back(i);
    }
    return out;
  }

  std::vector<std::string> other_drugs() const {
    std::vector<std::string> ids;
    for (const auto& e : library_.entries())
      if (e.drug_id != intended_.drug_id && (ids.empty() || ids.back() != e.drug_id))
        ids.push_back(e.drug_id);
    return ids;
  }

  std::vector<ProgramField> keyed_fields(CorruptionKind kind, const OperatorModel& model) const {
    std::vector<ProgramField> out;
    for (ProgramField f : model.fields) {
      const std::string s = shortest_fixed(field_value(intended_, f));
      const bool ok = kind == CorruptionKind::AdjacentTransposition ? !pairs(s).empty()
                                                                     : !digits(s).empty();
      if (ok) out.push_back(f);
    }
    return out;
  }

  bool applicable(CorruptionKind kind, const OperatorModel& model) const {
    switch (kind) {
      case CorruptionKind::WrongDrug: return !other_drugs().empty();
      case CorruptionKind::WrongField:
        return round_significant(intended_.dose_value) != round_significant(intended_.rate_ml_per_h);
      default: return !keyed_fields(kind, model).empty();
    }
  }

  void add(const InfusionProgram& p, double prob, Distribution& dist) {
    if (++terms_ > cap_)
      throw Error(ErrorCode::SpaceTooLarge, "more than " + std::to_string(cap_) + " corruption outcomes");
    auto key = canonical_dump(to_json(canonicalize(p)));
    auto [it, inserted] = dist.try_emplace(std::move(key), Outcome{p, 0.0});
    it->second.probability += prob;
  }

  void add_field(ProgramField f, const std::string& text, double prob, Distribution& dist) {
    InfusionProgram p = intended_;
    set_field_value(p, f, std::strtod(text.c_str(), nullptr));
    add(p, prob, dist);
  }

  void expand(CorruptionKind kind, const OperatorModel& model, double pk, Distribution& dist) {
    switch (kind) {
      case CorruptionKind::WrongDrug: {
        const auto ids = other_drugs();
        for (const auto& id : ids) {
          InfusionProgram p = intended_;
          p.drug_id = id;
          add(p, pk / static_cast<double>(ids.size()), dist);
        }
        return;
      }
      case CorruptionKind::WrongField: {
        InfusionProgram p = intended_;
        p.dose_value = intended_.rate_ml_per_h;
        p.rate_ml_per_h = intended_.dose_value;
        add(p, pk, dist);
        return;
      }
      default: break;
    }
    const auto fields = keyed_fields(kind, model);
    const double pf = pk / static_cast<double>(fields.size());
    for (ProgramField f : fields) {
      const std::string s = shortest_fixed(field_value(intended_, f));
      if (kind == CorruptionKind::AdjacentTransposition) {
        const auto ps = pairs(s);
        for (std::size_t i : ps) {
          std::string t = s;
          const char c = t[i];
          t[i] = t[i + 1];
          t[i + 1] = c;
          add_field(f, t, pf / static_cast<double>(ps.size()), dist);
        }
        continue;
      }
      const auto ds = digits(s);
      const double pp = pf / static_cast<double>(ds.size());
      for (std::size_t i : ds) {
        if (kind == CorruptionKind::DoubleBounce) {
          add_field(f, s.substr(0, i + 1) + s.substr(i), pp, dist);
          continue;
        }
        for (char d = '0'; d <= '9'; ++d) {
          if (d == s[i]) continue;
          std::string t = s;
          t[i] = d;
          add_field(f, t, pp / 9.0, dist);
        }
      }
    }
  }

  const InfusionProgram& intended_;
  const DrugLibrary& library_;
  std::size_t cap_;
  std::size_t terms_ = 0;
};

// 1 when a concurred (or single) entry of this program would reach the pump
// wrong: valid input, a library entry exists, and DERS lets it through
// under the scenario's override policy.
bool actuated_wrong(const Scenario& s, const InfusionProgram& p) {
  if (program_diff(p, s.intended).empty()) return false;
  if (!(p.dose_value > 0.0 && p.rate_ml_per_h > 0.0 && p.vtbi_ml > 0.0)) return false;
  if (!std::isfinite(p.dose_value) || !std::isfinite(p.rate_ml_per_h) || !std::isfinite(p.vtbi_ml))
    return false;
  const DrugLibraryEntry* entry = nullptr;
  for (const auto& e : s.library.entries())
    if (e.drug_id == p.drug_id && e.care_area == p.care_area) entry = &e;
  if (!entry) return false;
  try {
    const DersVerdict v = check_program(*entry, p);
    if (v.kind == VerdictKind::HardViolation) return false;
    if (v.kind == VerdictKind::SoftViolation) return s.override_policy == OverridePolicy::ApproveAll;
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

InfusionProgram routed_program(const InfusionProgram& intended) {
  InfusionProgram p = intended;
  p.patient_id = intended.patient_id + "/other-bed";
  return p;
}

double oracle_undetected_probability(const Scenario& s, std::size_t max_outcomes) {
  const double r = s.wrong_pump_routing_p;
  const double px = s.operator_x.error_probability();
  Enumerator en(s.intended, s.library, max_outcomes);
  const Distribution dx = en.conditional(s.operator_x);

  if (s.mode == Mode::SingleOperator) {
    double sum = 0.0;
    for (const auto& [key, o] : dx)
      if (actuated_wrong(s, o.program)) sum += o.probability;
    const double routed = actuated_wrong(s, routed_program(s.intended)) ? 1.0 : 0.0;
    return r * routed + (1.0 - r) * px * sum;
  }

  // A misrouted entry always carries the wrong patient, so the comparison
  // catches it; only unrouted trials contribute.
  const double py = s.operator_y.error_probability();
  const Distribution dy = en.conditional(s.operator_y);
  double sum = 0.0;
  for (const auto& [key, ox] : dx) {
    auto it = dy.find(key);
    if (it == dy.end()) continue;
    if (actuated_wrong(s, ox.program)) sum += ox.probability * it->second.probability;
  }
  return (1.0 - r) * px * py * sum;
}

}  // namespace ivc
