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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivc/canonical_json.hpp"
#include "ivc/program.hpp"

namespace ivc {

class Episode;

enum class CqiKind {
  EpisodeOpened,
  ReadOut,
  EntrySealed,
  CompareResult,
  Verdict,
  OverrideRequested,
  OverrideApproved,
  OverrideBudgetWarning,
  Actuation,
  Alarm,
  Ack,
  AbortVote,
  Abort,
  Stop,
  Complete,
  SignOffRequested,
  Signed,
  NoLibraryMode,
  EntryRestart,
};

std::string_view to_string(CqiKind kind);
CqiKind cqi_kind_from_string(std::string_view text);

struct CqiEvent {
  std::uint64_t seq = 0;
  double timestamp = 0.0;  // simulated hours
  std::string pump_id;
  std::string episode_id;
  CqiKind kind = CqiKind::Alarm;
  std::vector<std::string> operator_ids;
  Json payload = Json::object();

  friend bool operator==(const CqiEvent&, const CqiEvent&) = default;
};

Json to_json(const CqiEvent& event);
CqiEvent cqi_event_from_json(const Json& doc);

/// One canonical JSON object followed by '\n'.
std::string to_json_line(const CqiEvent& event);
void append_json_line(const CqiEvent& event, std::string& out);

/// Append-only event log for one pump. Single writer; events are never
/// mutated once recorded.
class CqiLog {
 public:
  /// Assigns the next sequence number and appends. Throws
  /// TimestampRegression or MalformedEvent.
  std::uint64_t record(CqiEvent event);

  const std::vector<CqiEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  double last_timestamp() const noexcept { return events_.empty() ? 0.0 : events_.back().timestamp; }

 private:
  std::vector<CqiEvent> events_;
};

struct Signature {
  std::string operator_id;
  Role role = Role::Executive;
  double at = 0.0;
  std::string digest;

  friend bool operator==(const Signature&, const Signature&) = default;
};

struct SignOffTranscript {
  std::string pump_id;
  std::string episode_id;
  std::vector<CqiEvent> events;
  std::string digest;
  std::vector<Operator> required_signers;
  std::vector<Signature> signatures;

  bool complete() const;
};

/// SHA-256 over the json-lines bytes of the given events.
std::string transcript_digest(std::span<const CqiEvent> events);

/// Collects the episode's events (sign-off records excluded) in sequence
/// order. The episode must have reached SignOffPending, Aborted, Blocked or
/// SignedOff. Throws UnknownEpisode or EpisodeStillActive.
SignOffTranscript build_transcript(const CqiLog& log, std::string_view episode_id);

/// Adds the operator's signature over the transcript digest and records a
/// Signed event. Once every required signer has signed, a SignOffPending
/// episode moves to SignedOff. Returns whether the signer set is complete.
bool sign(SignOffTranscript& transcript, Episode& episode, std::string_view operator_id,
          double now, CqiLog& log);

/// Plain-text rendering, one event per line. Only available once the
/// signer set is complete (throws IncompleteSignOff otherwise).
std::string render_printout(const SignOffTranscript& transcript);

enum class ExportFormat { Csv, JsonLines };

std::string export_cqi(std::span<const CqiEvent> events, ExportFormat format);

/// Parses a json-lines export. Blank lines are skipped.
std::vector<CqiEvent> import_jsonl(std::string_view text);

struct DrugStats {
  std::string drug_id;
  std::uint64_t episodes = 0;
  std::uint64_t soft_alerts = 0;
  std::uint64_t overrides = 0;
  double override_rate = 0.0;                 // overrides / episodes
  double soft_alert_override_fraction = 0.0;  // overrides / soft alerts

  friend bool operator==(const DrugStats&, const DrugStats&) = default;
};

struct AnalyticsReport {
  std::uint64_t episodes = 0;
  std::uint64_t alerts = 0;
  double alert_rate_per_episode = 0.0;
  std::uint64_t soft_alerts = 0;
  std::uint64_t overrides = 0;
  double soft_alert_override_fraction = 0.0;
  /// Sorted by override_rate descending, then drug_id ascending.
  std::vector<DrugStats> drugs;
  std::vector<std::string> budget_flagged_episodes;
  std::vector<std::string> no_library_episodes;

  friend bool operator==(const AnalyticsReport&, const AnalyticsReport&) = default;
};

AnalyticsReport analyze(std::span<const CqiEvent> events);

Json to_json(const AnalyticsReport& report);
std::string to_csv(const AnalyticsReport& report);

}  // namespace ivc
