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
#include <cmath>
#include <utility>

#include <omp.h>

#include "ivc/concurrence.hpp"
#include "ivc/errors.hpp"
#include "ivc/pump_core.hpp"
#include "ivc/simulator.hpp"

namespace ivc {

namespace {

constexpr std::array<std::string_view, kTrialOutcomes> kOutcomeNames = {
    "CompletedCorrect",       "CaughtByMismatch",        "CaughtByDersHard",
    "CaughtBySoftNoOverride", "UndetectedErrorActuated", "AbortedByConcurrence",
    "HaltedNoLibraryEntry",
};

constexpr std::size_t kMaxSteps = 100'000;
constexpr std::size_t kViolationSamples = 5;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ trial) + stream);
}

bool valid_program(const InfusionProgram& p) {
  try {
    validate_program(p);
    return true;
  } catch (const Error&) {
    return false;
  }
}

const Operator kCommanding{"C", Role::Commanding};
const Operator kOperatorX{"X", Role::Executive};
const Operator kOperatorY{"Y", Role::Executive};

void record_plain(CqiLog& log, const std::string& pump, const std::string& episode, CqiKind kind,
                  std::vector<std::string> ids, Json payload, double now) {
  CqiEvent e;
  e.timestamp = now;
  e.pump_id = pump;
  e.episode_id = episode;
  e.kind = kind;
  e.operator_ids = std::move(ids);
  e.payload = std::move(payload);
  log.record(std::move(e));
}

TrialResult run_single(const Scenario& s, std::uint64_t index, const InfusionProgram& entry) {
  TrialResult r;
  const std::string pump = "pump-" + std::to_string(index);
  const std::string episode = "T" + std::to_string(index);
  record_plain(r.log, pump, episode, CqiKind::EntrySealed, {kOperatorX.operator_id},
               {{"role", "Executive"}, {"mode", "single"}}, 0.0);

  if (!valid_program(entry)) {
    r.outcome = TrialOutcome::CaughtByDersHard;
    return r;
  }
  const DrugLibraryEntry* lib_entry = nullptr;
  try {
    lib_entry = &lookup(s.library, entry.drug_id, entry.care_area);
  } catch (const Error&) {
    record_plain(r.log, pump, episode, CqiKind::Verdict, {},
                 {{"verdict", "NoLibraryEntry"}, {"drug_id", entry.drug_id}}, 0.0);
    r.outcome = TrialOutcome::HaltedNoLibraryEntry;
    return r;
  }
  DersVerdict verdict;
  try {
    verdict = check_program(*lib_entry, entry);
  } catch (const Error& e) {
    record_plain(r.log, pump, episode, CqiKind::Verdict, {},
                 {{"verdict", std::string(to_string(e.code()))}, {"drug_id", entry.drug_id}}, 0.0);
    r.outcome = TrialOutcome::CaughtByDersHard;
    return r;
  }
  Json payload = to_json(verdict);
  payload["drug_id"] = entry.drug_id;
  record_plain(r.log, pump, episode, CqiKind::Verdict, {}, std::move(payload), 0.0);
  if (verdict.kind == VerdictKind::HardViolation) {
    r.outcome = TrialOutcome::CaughtByDersHard;
    return r;
  }
  if (verdict.kind == VerdictKind::SoftViolation && s.override_policy == OverridePolicy::RefuseAll) {
    r.outcome = TrialOutcome::CaughtBySoftNoOverride;
    return r;
  }
  record_plain(r.log, pump, episode, CqiKind::Actuation, {kOperatorX.operator_id},
               {{"program", to_json(entry)}, {"drug_id", entry.drug_id}}, 0.0);
  r.actuated = entry;
  r.outcome = program_diff(entry, s.intended).empty() ? TrialOutcome::CompletedCorrect
                                                       : TrialOutcome::UndetectedErrorActuated;
  return r;
}

// Joint abort by the two executives; also stops the pump if it is running.
void joint_abort(Episode& ep, Pump* pump, double now, CqiLog& log) {
  if (is_absorbing(ep.state())) return;
  ep.vote_abort(kOperatorX.operator_id, now, log);
  if (ep.vote_abort(kOperatorY.operator_id, now, log) && pump &&
      (pump->state() == PumpState::Infusing || pump->state() == PumpState::Paused))
    pump->stop(now, log);
}

TrialResult run_concurrence(const Scenario& s, std::uint64_t index, const InfusionProgram& entry_x,
                            const InfusionProgram& entry_y, TrialStreams& streams) {
  TrialResult r;
  CqiLog& log = r.log;
  double now = 0.0;
  const std::string pump_id = "pump-" + std::to_string(index);
  EpisodeConfig config;
  config.override_budget = s.override_budget;
  Episode ep = Episode::open("T" + std::to_string(index), pump_id, kCommanding,
                             {kOperatorX, kOperatorY}, now, log, config);
  ep.record_read_out(kCommanding.operator_id, now, log);

  if (!valid_program(entry_x) || !valid_program(entry_y)) {
    // The pump rejects the keyed value outright.
    r.outcome = TrialOutcome::CaughtByDersHard;
    joint_abort(ep, nullptr, now, log);
    return r;
  }
  ep.submit_entry(kOperatorX.operator_id, entry_x, now, log);
  ep.submit_entry(kOperatorY.operator_id, entry_y, now, log);
  if (!ep.compare_entries(now, log).concurred) {
    r.outcome = TrialOutcome::CaughtByMismatch;
    joint_abort(ep, nullptr, now, log);
    return r;
  }

  const auto verdict = ep.review(s.library, now, log);
  if (ep.state() == EpisodeState::Blocked) {
    r.outcome = ep.block_reason() == BlockReason::NoLibraryEntry ? TrialOutcome::HaltedNoLibraryEntry
                                                                 : TrialOutcome::CaughtByDersHard;
    joint_abort(ep, nullptr, now, log);
    return r;
  }
  if (verdict && verdict->kind == VerdictKind::SoftViolation) {
    if (s.override_policy == OverridePolicy::RefuseAll) {
      r.outcome = TrialOutcome::CaughtBySoftNoOverride;
      joint_abort(ep, nullptr, now, log);
      return r;
    }
    ep.request_override(kOperatorX.operator_id, now, log);
    ep.approve_override(kOperatorY.operator_id, now, log);
    for (const auto& alarm : ep.open_alarms())
      ep.acknowledge_alarm(alarm.alarm_id, kOperatorX.operator_id, now, log);
  }

  Pump pump(pump_id);
  pump.arm(ep, now, log);
  r.actuated = *ep.agreed_program();
  const bool wrong = !program_diff(*r.actuated, s.intended).empty();

  std::vector<bool> fired(s.fault_schedule.size(), false);
  bool aborted = false;
  std::size_t steps = 0;
  while (pump.state() != PumpState::Done && !aborted) {
    if (++steps > kMaxSteps) {
      r.violations.push_back("infusion did not finish within the step cap");
      break;
    }
    std::vector<FaultTrigger> faults;
    bool abort_on_alarm = false;
    for (std::size_t i = 0; i < s.fault_schedule.size(); ++i) {
      const auto& f = s.fault_schedule[i];
      if (fired[i] || f.t_hours >= now + s.dt_hours) continue;
      fired[i] = true;
      faults.push_back({f.kind, f.clinically_significant});
      abort_on_alarm = abort_on_alarm || f.abort;
    }
    // Drawn every step so the stream stays aligned across injection rates.
    if (uniform01(streams.faults) < s.false_alarm_rate)
      faults.push_back({AlarmKind::Occlusion, false});

    const auto raised = pump.step(ep, s.dt_hours, faults, now, log);
    for (const auto& alarm : raised) {
      if (alarm.clinically_significant) {
        ++r.significant_alarms;
      } else {
        ++r.false_alarms;
      }
    }
    if (!raised.empty() && abort_on_alarm) {
      joint_abort(ep, &pump, now, log);
      aborted = true;
      break;
    }
    for (const auto& alarm : raised) {
      if (alarm.clinically_significant) {
        // Fatigue from nuisance alarms earlier in this step counts too.
        for (const auto* op : {&kOperatorX, &kOperatorY}) {
          const OperatorModel& m = op == &kOperatorX ? s.operator_x : s.operator_y;
          const double pm = miss_probability(m.base_miss, m.fatigue_c, r.false_alarms);
          if (uniform01(streams.acks) < pm) ++r.significant_alarm_misses;
          ep.acknowledge_alarm(alarm.alarm_id, op->operator_id, now, log);
        }
      } else {
        ep.acknowledge_alarm(alarm.alarm_id, kOperatorX.operator_id, now, log);
      }
    }
    now += s.dt_hours;
  }

  if (std::abs(pump.infused_ml() + pump.remaining_ml() - r.actuated->vtbi_ml) > 1e-9)
    r.violations.push_back("volume not conserved");

  if (pump.state() == PumpState::Done) {
    SignOffTranscript t = build_transcript(log, ep.episode_id());
    for (const auto& signer : ep.required_signers()) sign(t, ep, signer.operator_id, now, log);
    if (ep.state() != EpisodeState::SignedOff) r.violations.push_back("episode not signed off");
  }

  if (wrong) {
    r.outcome = TrialOutcome::UndetectedErrorActuated;
  } else if (aborted) {
    r.outcome = TrialOutcome::AbortedByConcurrence;
  } else {
    r.outcome = TrialOutcome::CompletedCorrect;
  }
  return r;
}

struct Accumulator {
  std::array<std::uint64_t, kTrialOutcomes> counts{};
  std::uint64_t significant_alarms = 0;
  std::uint64_t misses = 0;
  std::uint64_t false_alarms = 0;
  std::uint64_t violations = 0;
  std::vector<std::pair<std::uint64_t, std::string>> samples;

  void add(std::uint64_t index, const TrialResult& r) {
    ++counts[static_cast<std::size_t>(r.outcome)];
    significant_alarms += r.significant_alarms;
    misses += r.significant_alarm_misses;
    false_alarms += r.false_alarms;
    violations += r.violations.size();
    for (const auto& v : r.violations)
      if (samples.size() < kViolationSamples) samples.emplace_back(index, v);
  }

  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < kTrialOutcomes; ++i) counts[i] += o.counts[i];
    significant_alarms += o.significant_alarms;
    misses += o.misses;
    false_alarms += o.false_alarms;
    violations += o.violations;
    samples.insert(samples.end(), o.samples.begin(), o.samples.end());
  }
};

MonteCarloRun finish(const Scenario& s, Accumulator acc, MonteCarloRun run) {
  MonteCarloReport& rep = run.report;
  rep.mode = s.mode;
  rep.seed = s.seed;
  rep.trials = s.trials;
  rep.counts = acc.counts;
  rep.significant_alarms = acc.significant_alarms;
  rep.significant_alarm_misses = acc.misses;
  rep.false_alarms = acc.false_alarms;
  rep.invariant_violations = acc.violations;
  std::sort(acc.samples.begin(), acc.samples.end());
  for (std::size_t i = 0; i < acc.samples.size() && i < kViolationSamples; ++i)
    rep.violation_samples.push_back("trial " + std::to_string(acc.samples[i].first) + ": " +
                                    acc.samples[i].second);
  const double px = s.operator_x.error_probability();
  rep.error_bound = s.mode == Mode::Concurrence ? px * s.operator_y.error_probability() : px;
  try {
    rep.oracle_undetected = oracle_undetected_probability(s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SpaceTooLarge) throw;
  }

  std::uint64_t total = 0;
  for (auto c : rep.counts) total += c;
  if (total != s.trials) {
    ++rep.invariant_violations;
    rep.violation_samples.push_back("outcome counts do not sum to trials");
  }
  return run;
}

MonteCarloRun prepare(const Scenario& s, const RunOptions& options) {
  validate(s);
  MonteCarloRun run;
  run.cqi_logs.resize(std::min<std::uint64_t>(options.keep_cqi_trials, s.trials));
  if (options.keep_outcomes) run.outcomes.resize(s.trials);
  return run;
}

void keep(MonteCarloRun& run, std::uint64_t i, TrialResult& r) {
  if (i < run.cqi_logs.size()) run.cqi_logs[i] = std::move(r.log);
  if (!run.outcomes.empty()) run.outcomes[i] = r.outcome;
}

}  // namespace

std::string_view to_string(TrialOutcome outcome) {
  return kOutcomeNames[static_cast<std::size_t>(outcome)];
}

TrialStreams::TrialStreams(std::uint64_t seed, std::uint64_t trial_index)
    : entry_x(stream_seed(seed, trial_index, 1)),
      entry_y(stream_seed(seed, trial_index, 2)),
      routing(stream_seed(seed, trial_index, 3)),
      faults(stream_seed(seed, trial_index, 4)),
      acks(stream_seed(seed, trial_index, 5)) {}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

TrialResult run_trial_with_entries(const Scenario& s, std::uint64_t index,
                                   const InfusionProgram& entry_x,
                                   const std::optional<InfusionProgram>& entry_y,
                                   TrialStreams& streams) {
  TrialResult r;
  try {
    if (s.mode == Mode::SingleOperator) {
      r = run_single(s, index, entry_x);
    } else {
      r = run_concurrence(s, index, entry_x, entry_y.value_or(entry_x), streams);
    }
  } catch (const Error& e) {
    r.violations.push_back(std::string("unexpected error: ") + e.what());
  }
  const bool differs = r.actuated && !program_diff(*r.actuated, s.intended).empty();
  if ((r.outcome == TrialOutcome::UndetectedErrorActuated) != differs)
    r.violations.push_back("outcome disagrees with actuated program");
  return r;
}

TrialResult run_trial(const Scenario& s, std::uint64_t trial_index) {
  TrialStreams streams(s.seed, trial_index);
  const bool routed = s.wrong_pump_routing_p > 0.0 && uniform01(streams.routing) < s.wrong_pump_routing_p;
  const InfusionProgram x = corrupt_entry(s.operator_x, s.intended, s.library, streams.entry_x);
  if (s.mode == Mode::SingleOperator)
    return run_trial_with_entries(s, trial_index, routed ? routed_program(s.intended) : x,
                                  std::nullopt, streams);
  InfusionProgram y = corrupt_entry(s.operator_y, s.intended, s.library, streams.entry_y);
  if (routed) y = routed_program(s.intended);
  return run_trial_with_entries(s, trial_index, x, y, streams);
}

MonteCarloRun run_monte_carlo_serial(const Scenario& s, const RunOptions& options) {
  MonteCarloRun run = prepare(s, options);
  Accumulator acc;
  for (std::uint64_t i = 0; i < s.trials; ++i) {
    TrialResult r = run_trial(s, i);
    acc.add(i, r);
    keep(run, i, r);
  }
  return finish(s, std::move(acc), std::move(run));
}

MonteCarloRun run_monte_carlo(const Scenario& s, const RunOptions& options) {
  MonteCarloRun run = prepare(s, options);
  Accumulator total;
  const auto n = static_cast<std::int64_t>(s.trials);
#pragma omp parallel
  {
    Accumulator local;
#pragma omp for schedule(dynamic, 256) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      TrialResult r = run_trial(s, idx);
      local.add(idx, r);
      keep(run, idx, r);
    }
#pragma omp critical(ivc_monte_carlo_merge)
    total.merge(local);
  }
  return finish(s, std::move(total), std::move(run));
}

double MonteCarloReport::rate(TrialOutcome o) const {
  return trials == 0 ? 0.0 : static_cast<double>(count(o)) / static_cast<double>(trials);
}

BinomialInterval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  // Clamp so the interval always contains p despite rounding at p = 0 or 1.
  return {std::min(p, std::max(0.0, centre - half)), std::max(p, std::min(1.0, centre + half))};
}

Json to_json(const MonteCarloReport& r) {
  Json counts = Json::object();
  Json rates = Json::object();
  for (std::size_t i = 0; i < kTrialOutcomes; ++i) {
    const auto o = static_cast<TrialOutcome>(i);
    const std::string name(to_string(o));
    counts[name] = r.counts[i];
    const auto ci = wilson_interval(r.counts[i], r.trials);
    rates[name] = {{"p", r.rate(o)}, {"ci95_low", ci.low}, {"ci95_high", ci.high}};
  }
  Json oracle = {{"error_bound", r.error_bound}};
  oracle["undetected_probability"] = r.oracle_undetected ? Json(*r.oracle_undetected) : Json(nullptr);
  return {{"mode", r.mode == Mode::Concurrence ? "concurrence" : "single"},
          {"seed", r.seed},
          {"trials", r.trials},
          {"counts", std::move(counts)},
          {"rates", std::move(rates)},
          {"oracle", std::move(oracle)},
          {"alarms",
           {{"significant", r.significant_alarms},
            {"significant_missed", r.significant_alarm_misses},
            {"false", r.false_alarms}}},
          {"invariant_violations", r.invariant_violations},
          {"violation_samples", r.violation_samples}};
}

}  // namespace ivc
