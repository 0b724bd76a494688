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

#include "ivc/concurrence.hpp"

#include <algorithm>
#include <array>

#include "ivc/errors.hpp"

namespace ivc {

namespace {

constexpr std::array kStateNames = {
    "AwaitingEntries", "Comparing", "Mismatch",     "DersReview", "Blocked",
    "OverridePending", "ReadyToActuate", "Running", "AlarmPending", "Aborted",
    "Completed",       "SignOffPending", "SignedOff",
};

}  // namespace

std::string_view to_string(EpisodeState state) {
  return kStateNames[static_cast<std::size_t>(state)];
}

EpisodeState episode_state_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kStateNames.size(); ++i)
    if (text == kStateNames[i]) return static_cast<EpisodeState>(i);
  throw Error(ErrorCode::MalformedEvent, "unknown episode state '" + std::string(text) + "'");
}

bool is_absorbing(EpisodeState state) noexcept {
  return state == EpisodeState::Aborted || state == EpisodeState::SignedOff;
}

Episode Episode::open(std::string episode_id, std::string pump_id, Operator commanding,
                      std::vector<Operator> executives, double now, CqiLog& log,
                      EpisodeConfig config) {
  if (executives.empty()) throw Error(ErrorCode::NoExecutive, "at least one executive required");
  if (executives.size() > 2) throw Error(ErrorCode::NoExecutive, "at most two executives");

  commanding.role = Role::Commanding;
  for (auto& e : executives) e.role = Role::Executive;

  std::vector<std::string> ids{commanding.operator_id};
  for (const auto& e : executives) ids.push_back(e.operator_id);
  for (const auto& id : ids)
    if (id.empty()) throw Error(ErrorCode::UnknownOperator, "operator ids must be non-empty");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw Error(ErrorCode::DuplicateOperator, *std::adjacent_find(ids.begin(), ids.end()));

  Episode ep;
  ep.episode_id_ = std::move(episode_id);
  ep.pump_id_ = std::move(pump_id);
  ep.commanding_ = std::move(commanding);
  ep.executives_ = std::move(executives);
  ep.config_ = config;
  if (ep.executives_.size() == 2) {
    ep.entering_pair_ = {ep.executives_[0].operator_id, ep.executives_[1].operator_id};
  } else {
    ep.entering_pair_ = {ep.executives_[0].operator_id, ep.commanding_.operator_id};
  }

  Json execs = Json::array();
  for (const auto& e : ep.executives_) execs.push_back(e.operator_id);
  ep.emit(CqiKind::EpisodeOpened, {},
          {{"commanding", ep.commanding_.operator_id},
           {"executives", std::move(execs)},
           {"entering_pair", ep.entering_pair_},
           {"override_budget", config.override_budget}},
          now, log);
  return ep;
}

std::vector<Operator> Episode::required_signers() const {
  std::vector<Operator> signers{commanding_};
  signers.insert(signers.end(), executives_.begin(), executives_.end());
  return signers;
}

bool Episode::is_member(std::string_view operator_id) const {
  if (commanding_.operator_id == operator_id) return true;
  return std::any_of(executives_.begin(), executives_.end(),
                     [&](const Operator& o) { return o.operator_id == operator_id; });
}

bool Episode::is_entering(std::string_view operator_id) const {
  return std::find(entering_pair_.begin(), entering_pair_.end(), operator_id) !=
         entering_pair_.end();
}

bool Episode::read_out_required() const {
  return executives_.size() == 2 && config_.require_read_out;
}

std::vector<AlarmEvent> Episode::open_alarms() const {
  std::vector<AlarmEvent> open;
  std::copy_if(alarms_.begin(), alarms_.end(), std::back_inserter(open),
               [](const AlarmEvent& a) { return !a.closed(); });
  return open;
}

void Episode::emit(CqiKind kind, std::vector<std::string> operator_ids, Json payload, double now,
                   CqiLog& log, bool with_state) const {
  if (with_state) payload["state"] = std::string(to_string(state_));
  CqiEvent event;
  event.timestamp = now;
  event.pump_id = pump_id_;
  event.episode_id = episode_id_;
  event.kind = kind;
  event.operator_ids = std::move(operator_ids);
  event.payload = std::move(payload);
  log.record(std::move(event));
}

void Episode::require_state(EpisodeState expected, std::string_view op) const {
  if (state_ != expected)
    throw Error(ErrorCode::WrongState, std::string(op) + " requires " +
                                           std::string(to_string(expected)) + ", episode is " +
                                           std::string(to_string(state_)));
}

void Episode::require_member(std::string_view operator_id) const {
  if (!is_member(operator_id)) throw Error(ErrorCode::UnknownOperator, std::string(operator_id));
}

void Episode::record_read_out(std::string_view operator_id, double now, CqiLog& log) {
  require_state(EpisodeState::AwaitingEntries, "read-out");
  if (operator_id != commanding_.operator_id)
    throw Error(ErrorCode::UnknownOperator, "read-out must come from the commanding operator");
  read_out_done_ = true;
  emit(CqiKind::ReadOut, {commanding_.operator_id}, Json::object(), now, log);
}

EntryReceipt Episode::submit_entry(std::string_view operator_id, const InfusionProgram& program,
                                   double now, CqiLog& log) {
  if (!is_entering(operator_id)) throw Error(ErrorCode::NotAnEnteringOperator, std::string(operator_id));
  // Checked before the state so that a resubmission attempt cannot tell
  // whether the peer has already sealed (which would move us to Comparing).
  const bool already = std::any_of(entries_.begin(), entries_.end(), [&](const SealedEntry& e) {
    return e.operator_id == operator_id;
  });
  if (already) throw Error(ErrorCode::DuplicateSubmission, std::string(operator_id));
  require_state(EpisodeState::AwaitingEntries, "submit_entry");
  if (read_out_required() && !read_out_done_)
    throw Error(ErrorCode::ReadOutRequired, "protocol read-out has not been recorded");
  validate_program(program);

  entries_.push_back(SealedEntry{std::string(operator_id), program, now});
  const Role role =
      operator_id == commanding_.operator_id ? Role::Commanding : Role::Executive;
  // Submission metadata only; no state, no entry count.
  emit(CqiKind::EntrySealed, {std::string(operator_id)}, {{"role", std::string(to_string(role))}},
       now, log, /*with_state=*/false);
  if (entries_.size() == 2) state_ = EpisodeState::Comparing;
  return EntryReceipt{std::string(operator_id), now};
}

CompareOutcome Episode::compare_entries(double now, CqiLog& log) {
  require_state(EpisodeState::Comparing, "compare_entries");
  CompareOutcome outcome;
  outcome.diff = program_diff(entries_[0].program, entries_[1].program);
  outcome.concurred = outcome.diff.empty();

  std::vector<std::string> ids{entries_[0].operator_id, entries_[1].operator_id};
  if (outcome.concurred) {
    agreed_ = entries_[0].program;
    state_ = EpisodeState::DersReview;
    emit(CqiKind::CompareResult, std::move(ids),
         {{"result", "concurred"}, {"drug_id", agreed_->drug_id}}, now, log);
  } else {
    entries_.clear();
    state_ = EpisodeState::Mismatch;
    emit(CqiKind::CompareResult, std::move(ids), {{"result", "mismatch"}, {"fields", outcome.diff}},
         now, log);
  }
  return outcome;
}

void Episode::restart_entry(double now, CqiLog& log) {
  if (state_ != EpisodeState::Mismatch && state_ != EpisodeState::Blocked)
    throw Error(ErrorCode::WrongState, "restart requires Mismatch or Blocked, episode is " +
                                           std::string(to_string(state_)));
  entries_.clear();
  agreed_.reset();
  verdict_.reset();
  block_reason_ = BlockReason::None;
  no_library_mode_ = false;
  override_approvals_.clear();
  state_ = EpisodeState::AwaitingEntries;
  emit(CqiKind::EntryRestart, {}, Json::object(), now, log);
}

std::optional<DersVerdict> Episode::review(const DrugLibrary& library, double now, CqiLog& log) {
  require_state(EpisodeState::DersReview, "review");
  const InfusionProgram& program = *agreed_;

  const DrugLibraryEntry* entry = nullptr;
  try {
    entry = &lookup(library, program.drug_id, program.care_area);
  } catch (const Error&) {
    if (config_.allow_no_library) {
      no_library_mode_ = true;
      state_ = EpisodeState::ReadyToActuate;
      emit(CqiKind::NoLibraryMode, {},
           {{"drug_id", program.drug_id}, {"care_area", program.care_area},
            {"library_version", library.version()}},
           now, log);
      return std::nullopt;
    }
    state_ = EpisodeState::Blocked;
    block_reason_ = BlockReason::NoLibraryEntry;
    emit(CqiKind::Verdict, {},
         {{"verdict", "NoLibraryEntry"}, {"drug_id", program.drug_id},
          {"care_area", program.care_area}, {"library_version", library.version()}},
         now, log);
    return std::nullopt;
  }

  DersVerdict verdict;
  try {
    verdict = check_program(*entry, program);
  } catch (const Error& e) {
    state_ = EpisodeState::Blocked;
    block_reason_ = BlockReason::ProgramNotCheckable;
    emit(CqiKind::Verdict, {},
         {{"verdict", std::string(to_string(e.code()))}, {"drug_id", program.drug_id},
          {"library_version", library.version()}},
         now, log);
    return std::nullopt;
  }
  verdict_ = verdict;

  switch (verdict.kind) {
    case VerdictKind::Pass:
      state_ = EpisodeState::ReadyToActuate;
      break;
    case VerdictKind::SoftViolation:
      break;  // stays in DersReview until a joint override or an abort
    case VerdictKind::HardViolation:
      state_ = EpisodeState::Blocked;
      block_reason_ = BlockReason::HardViolation;
      break;
  }
  Json payload = to_json(verdict);
  payload["drug_id"] = program.drug_id;
  payload["library_version"] = library.version();
  emit(CqiKind::Verdict, {}, std::move(payload), now, log);

  if (verdict.kind == VerdictKind::SoftViolation) {
    raise_alarm(AlarmKind::SoftLimit, false, now, log, /*enter_pending=*/false);
  } else if (verdict.kind == VerdictKind::HardViolation) {
    raise_alarm(AlarmKind::HardLimit, true, now, log, /*enter_pending=*/false);
  }
  return verdict;
}

void Episode::request_override(std::string_view operator_id, double now, CqiLog& log) {
  if (verdict_ && verdict_->kind == VerdictKind::HardViolation)
    throw Error(ErrorCode::HardLimitNotOverridable, episode_id_);
  require_state(EpisodeState::DersReview, "request_override");
  if (!verdict_ || verdict_->kind != VerdictKind::SoftViolation)
    throw Error(ErrorCode::WrongState, "no soft-limit violation to override");
  if (!is_entering(operator_id)) throw Error(ErrorCode::NotAnEnteringOperator, std::string(operator_id));

  override_approvals_ = {std::string(operator_id)};
  state_ = EpisodeState::OverridePending;
  emit(CqiKind::OverrideRequested, {std::string(operator_id)}, {{"drug_id", agreed_->drug_id}},
       now, log);
}

void Episode::approve_override(std::string_view operator_id, double now, CqiLog& log) {
  if (verdict_ && verdict_->kind == VerdictKind::HardViolation)
    throw Error(ErrorCode::HardLimitNotOverridable, episode_id_);
  require_state(EpisodeState::OverridePending, "approve_override");
  if (!is_entering(operator_id)) throw Error(ErrorCode::NotAnEnteringOperator, std::string(operator_id));

  override_approvals_.insert(std::string(operator_id));
  if (override_approvals_.size() < 2) return;

  ++override_count_;
  const bool over_budget = override_count_ > config_.override_budget;
  state_ = over_budget ? EpisodeState::AlarmPending : EpisodeState::ReadyToActuate;
  emit(CqiKind::OverrideApproved, entering_pair_,
       {{"drug_id", agreed_->drug_id}, {"override_count", override_count_}}, now, log);
  if (over_budget) {
    emit(CqiKind::OverrideBudgetWarning, entering_pair_,
         {{"drug_id", agreed_->drug_id},
          {"override_count", override_count_},
          {"override_budget", config_.override_budget}},
         now, log);
    resume_state_ = EpisodeState::ReadyToActuate;
    raise_alarm(AlarmKind::OverrideBudgetExceeded, false, now, log, /*enter_pending=*/true);
  }
}

bool Episode::vote_abort(std::string_view operator_id, double now, CqiLog& log) {
  if (is_absorbing(state_) || state_ == EpisodeState::Completed ||
      state_ == EpisodeState::SignOffPending)
    throw Error(ErrorCode::WrongState, "cannot abort an episode in " + std::string(to_string(state_)));
  require_member(operator_id);

  abort_votes_.insert(std::string(operator_id));
  emit(CqiKind::AbortVote, {std::string(operator_id)}, {{"votes", abort_votes_.size()}}, now, log);
  if (abort_votes_.size() < 2) return false;

  state_ = EpisodeState::Aborted;
  emit(CqiKind::Abort, {abort_votes_.begin(), abort_votes_.end()}, Json::object(), now, log);
  return true;
}

void Episode::acknowledge_alarm(std::string_view alarm_id, std::string_view operator_id,
                                double now, CqiLog& log) {
  require_state(EpisodeState::AlarmPending, "acknowledge_alarm");
  require_member(operator_id);
  auto it = std::find_if(alarms_.begin(), alarms_.end(), [&](const AlarmEvent& a) {
    return a.alarm_id == alarm_id && !a.closed();
  });
  if (it == alarms_.end()) throw Error(ErrorCode::UnknownAlarm, std::string(alarm_id));
  const bool dup = std::any_of(it->acks.begin(), it->acks.end(),
                               [&](const AlarmAck& a) { return a.operator_id == operator_id; });
  if (dup) throw Error(ErrorCode::DuplicateAck, std::string(operator_id));

  it->acks.push_back(AlarmAck{std::string(operator_id), now});
  const bool closed = it->closed();
  const bool all_closed =
      std::all_of(alarms_.begin(), alarms_.end(), [](const AlarmEvent& a) { return a.closed(); });
  if (all_closed) state_ = resume_state_;
  emit(CqiKind::Ack, {std::string(operator_id)},
       {{"alarm_id", it->alarm_id},
        {"alarm_kind", std::string(to_string(it->kind))},
        {"acks", it->acks.size()},
        {"required_acks", it->required_acks()},
        {"closed", closed}},
       now, log);
}

void Episode::begin_running(double now, CqiLog& log) {
  if (state_ != EpisodeState::ReadyToActuate)
    throw Error(ErrorCode::NotConcurred, "episode " + episode_id_ + " is " +
                                             std::string(to_string(state_)));
  state_ = EpisodeState::Running;
  resume_state_ = EpisodeState::Running;
  Json payload = {{"program", to_json(*agreed_)},
                  {"drug_id", agreed_->drug_id},
                  {"no_library_mode", no_library_mode_}};
  emit(CqiKind::Actuation, entering_pair_, std::move(payload), now, log);
}

AlarmEvent Episode::raise_alarm(AlarmKind kind, bool significant, double now, CqiLog& log,
                                       bool enter_pending) {
  AlarmEvent alarm;
  alarm.alarm_id = episode_id_ + "-A" + std::to_string(next_alarm_++);
  alarm.kind = kind;
  alarm.clinically_significant = significant;
  alarm.raised_at = now;

  if (enter_pending) {
    if (state_ == EpisodeState::Running) {
      resume_state_ = EpisodeState::Running;
      state_ = EpisodeState::AlarmPending;
    } else if (state_ != EpisodeState::AlarmPending) {
      throw Error(ErrorCode::WrongState,
                  "cannot raise a pump alarm in " + std::string(to_string(state_)));
    }
  }
  Json payload = {{"alarm_id", alarm.alarm_id},
                  {"alarm_kind", std::string(to_string(kind))},
                  {"clinically_significant", significant}};
  if (agreed_) payload["drug_id"] = agreed_->drug_id;
  emit(CqiKind::Alarm, {}, std::move(payload), now, log);

  // DERS limit alerts are answered through the override path, not acks.
  if (enter_pending) alarms_.push_back(alarm);
  return alarm;
}

void Episode::complete_infusion(double now, CqiLog& log) {
  require_state(EpisodeState::Running, "complete");
  state_ = EpisodeState::Completed;
  emit(CqiKind::Complete, {}, {{"vtbi_ml", agreed_->vtbi_ml}}, now, log);
  state_ = EpisodeState::SignOffPending;
  Json signers = Json::array();
  for (const auto& s : required_signers()) signers.push_back(s.operator_id);
  emit(CqiKind::SignOffRequested, {}, {{"required_signers", std::move(signers)}}, now, log);
}

void Episode::finalize_sign_off(const SignOffTranscript& transcript, double now, CqiLog& log) {
  (void)now;
  (void)log;
  require_state(EpisodeState::SignOffPending, "sign-off");
  if (transcript.episode_id != episode_id_)
    throw Error(ErrorCode::IncompleteSignOff, "transcript belongs to another episode");
  if (transcript_digest(transcript.events) != transcript.digest)
    throw Error(ErrorCode::IncompleteSignOff, "transcript digest does not match its events");
  for (const auto& signer : required_signers()) {
    const bool ok = std::any_of(
        transcript.signatures.begin(), transcript.signatures.end(), [&](const Signature& s) {
          return s.operator_id == signer.operator_id && s.digest == transcript.digest;
        });
    if (!ok) throw Error(ErrorCode::IncompleteSignOff, "missing signature of " + signer.operator_id);
  }
  state_ = EpisodeState::SignedOff;
}

}  // namespace ivc
