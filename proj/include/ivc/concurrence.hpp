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

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ivc/alarm.hpp"
#include "ivc/audit_cqi.hpp"
#include "ivc/drug_library.hpp"
#include "ivc/program.hpp"

namespace ivc {

enum class EpisodeState {
  AwaitingEntries,
  Comparing,
  Mismatch,
  DersReview,
  Blocked,
  OverridePending,
  ReadyToActuate,
  Running,
  AlarmPending,
  Aborted,
  Completed,
  SignOffPending,
  SignedOff,
};

std::string_view to_string(EpisodeState state);
EpisodeState episode_state_from_string(std::string_view text);

/// Aborted and SignedOff: nothing moves an episode out of these.
bool is_absorbing(EpisodeState state) noexcept;

struct EpisodeConfig {
  std::size_t override_budget = 3;
  /// Two-executive staffing only: entries are refused until the commanding
  /// operator has recorded the protocol read-out.
  bool require_read_out = true;
  /// Permit administration without a matching library entry. Recorded as
  /// NoLibraryMode in the log.
  bool allow_no_library = false;
};

/// What a submitter gets back. Deliberately carries nothing about the peer.
struct EntryReceipt {
  std::string operator_id;
  double sealed_at = 0.0;

  friend bool operator==(const EntryReceipt&, const EntryReceipt&) = default;
};

struct SealedEntry {
  std::string operator_id;
  InfusionProgram program;
  double sealed_at = 0.0;
};

struct CompareOutcome {
  bool concurred = false;
  std::vector<std::string> diff;  // field names, empty when concurred
};

/// Why a DersReview ended in Blocked.
enum class BlockReason { None, HardViolation, NoLibraryEntry, ProgramNotCheckable };

/// The dual-operator state machine for one administration.
///
/// Every decision point needs two distinct operators: the two sealed entries
/// must match, soft-limit overrides need both entering operators, abort needs
/// two votes, and clinically significant alarms need two acknowledgments.
/// Calls on one episode must be serialized by the caller.
class Episode {
 public:
  /// Data-entering pair is the two executives when there are two, otherwise
  /// the executive and the commanding operator. Throws DuplicateOperator,
  /// NoExecutive.
  static Episode open(std::string episode_id, std::string pump_id, Operator commanding,
                      std::vector<Operator> executives, double now, CqiLog& log,
                      EpisodeConfig config = {});

  const std::string& episode_id() const noexcept { return episode_id_; }
  const std::string& pump_id() const noexcept { return pump_id_; }
  EpisodeState state() const noexcept { return state_; }
  const Operator& commanding() const noexcept { return commanding_; }
  const std::vector<Operator>& executives() const noexcept { return executives_; }
  const std::vector<std::string>& entering_pair() const noexcept { return entering_pair_; }
  const EpisodeConfig& config() const noexcept { return config_; }
  /// Commanding operator plus every executive.
  std::vector<Operator> required_signers() const;

  bool is_member(std::string_view operator_id) const;
  bool is_entering(std::string_view operator_id) const;
  bool read_out_required() const;
  bool read_out_done() const noexcept { return read_out_done_; }

  std::size_t sealed_count() const noexcept { return entries_.size(); }
  const std::optional<InfusionProgram>& agreed_program() const noexcept { return agreed_; }
  const std::optional<DersVerdict>& verdict() const noexcept { return verdict_; }
  BlockReason block_reason() const noexcept { return block_reason_; }
  bool no_library_mode() const noexcept { return no_library_mode_; }
  const std::set<std::string>& override_approvals() const noexcept { return override_approvals_; }
  const std::set<std::string>& abort_votes() const noexcept { return abort_votes_; }
  std::size_t override_count() const noexcept { return override_count_; }
  const std::vector<AlarmEvent>& alarms() const noexcept { return alarms_; }
  std::vector<AlarmEvent> open_alarms() const;

  /// Commanding operator reads the protocol out before entries are taken.
  void record_read_out(std::string_view operator_id, double now, CqiLog& log);

  /// Seals one operator's program. Throws NotAnEnteringOperator,
  /// DuplicateSubmission, WrongState, ReadOutRequired, InvalidProgram.
  EntryReceipt submit_entry(std::string_view operator_id, const InfusionProgram& program,
                            double now, CqiLog& log);

  /// Comparing -> DersReview on exact canonical equality, else Mismatch with
  /// both entries discarded.
  CompareOutcome compare_entries(double now, CqiLog& log);

  /// Mismatch or Blocked -> AwaitingEntries. Counters and votes are kept.
  void restart_entry(double now, CqiLog& log);

  /// Runs DERS on the agreed program. Pass -> ReadyToActuate, soft violation
  /// stays in DersReview awaiting an override, hard violation or a missing
  /// library entry -> Blocked. Returns nullopt when no verdict could be
  /// rendered (no entry, or the program could not be normalized).
  std::optional<DersVerdict> review(const DrugLibrary& library, double now, CqiLog& log);

  void request_override(std::string_view operator_id, double now, CqiLog& log);
  void approve_override(std::string_view operator_id, double now, CqiLog& log);

  /// Returns true when this vote completed the abort.
  bool vote_abort(std::string_view operator_id, double now, CqiLog& log);

  void acknowledge_alarm(std::string_view alarm_id, std::string_view operator_id, double now,
                         CqiLog& log);

 private:
  friend class Pump;
  friend bool sign(SignOffTranscript&, Episode&, std::string_view, double, CqiLog&);

  Episode() = default;

  void begin_running(double now, CqiLog& log);
  AlarmEvent raise_alarm(AlarmKind kind, bool significant, double now, CqiLog& log,
                        bool enter_pending);
  void complete_infusion(double now, CqiLog& log);
  void finalize_sign_off(const SignOffTranscript& transcript, double now, CqiLog& log);

  void emit(CqiKind kind, std::vector<std::string> operator_ids, Json payload, double now,
            CqiLog& log, bool with_state = true) const;
  void require_state(EpisodeState expected, std::string_view op) const;
  void require_member(std::string_view operator_id) const;

  std::string episode_id_;
  std::string pump_id_;
  Operator commanding_;
  std::vector<Operator> executives_;
  std::vector<std::string> entering_pair_;
  EpisodeConfig config_;

  EpisodeState state_ = EpisodeState::AwaitingEntries;
  EpisodeState resume_state_ = EpisodeState::Running;
  bool read_out_done_ = false;
  std::vector<SealedEntry> entries_;
  std::optional<InfusionProgram> agreed_;
  std::optional<DersVerdict> verdict_;
  BlockReason block_reason_ = BlockReason::None;
  bool no_library_mode_ = false;
  std::set<std::string> override_approvals_;
  std::set<std::string> abort_votes_;
  std::size_t override_count_ = 0;
  std::vector<AlarmEvent> alarms_;
  std::size_t next_alarm_ = 1;
};

}  // namespace ivc
