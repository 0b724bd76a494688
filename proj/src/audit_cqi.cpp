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

#include "ivc/audit_cqi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "ivc/concurrence.hpp"
#include "ivc/errors.hpp"

namespace ivc {

namespace {

constexpr std::array kKindNames = {
    "EpisodeOpened", "ReadOut",  "EntrySealed", "CompareResult",   "Verdict",
    "OverrideRequested", "OverrideApproved", "OverrideBudgetWarning", "Actuation", "Alarm",
    "Ack",           "AbortVote", "Abort",      "Stop",            "Complete",
    "SignOffRequested", "Signed", "NoLibraryMode", "EntryRestart",
};

std::string csv_field(std::string_view text, bool force_quote = false) {
  const bool needs = force_quote || text.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string number_text(double v) { return canonical_dump(Json(v)); }

std::string payload_string(const CqiEvent& e, const char* key) {
  auto it = e.payload.find(key);
  if (it == e.payload.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(CqiKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

CqiKind cqi_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (text == kKindNames[i]) return static_cast<CqiKind>(i);
  throw Error(ErrorCode::MalformedEvent, "unknown event kind '" + std::string(text) + "'");
}

Json to_json(const CqiEvent& e) {
  return {{"seq", e.seq},
          {"timestamp", e.timestamp},
          {"pump_id", e.pump_id},
          {"episode_id", e.episode_id},
          {"kind", std::string(to_string(e.kind))},
          {"operator_ids", e.operator_ids},
          {"payload", e.payload}};
}

CqiEvent cqi_event_from_json(const Json& doc) {
  try {
    CqiEvent e;
    e.seq = doc.at("seq").get<std::uint64_t>();
    e.timestamp = doc.at("timestamp").get<double>();
    e.pump_id = doc.at("pump_id").get<std::string>();
    e.episode_id = doc.at("episode_id").get<std::string>();
    e.kind = cqi_kind_from_string(doc.at("kind").get<std::string>());
    e.operator_ids = doc.at("operator_ids").get<std::vector<std::string>>();
    e.payload = doc.at("payload");
    if (!e.payload.is_object()) throw Error(ErrorCode::MalformedEvent, "payload must be an object");
    return e;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::MalformedEvent, ex.what());
  }
}

void append_json_line(const CqiEvent& e, std::string& out) {
  // Same bytes as canonical_dump(to_json(e)); keys written in sorted order.
  out += "{\"episode_id\":";
  canonical_append_string(e.episode_id, out);
  out += ",\"kind\":";
  canonical_append_string(to_string(e.kind), out);
  out += ",\"operator_ids\":[";
  for (std::size_t i = 0; i < e.operator_ids.size(); ++i) {
    if (i) out.push_back(',');
    canonical_append_string(e.operator_ids[i], out);
  }
  out += "],\"payload\":";
  canonical_append(e.payload, out);
  out += ",\"pump_id\":";
  canonical_append_string(e.pump_id, out);
  out += ",\"seq\":";
  out += std::to_string(e.seq);
  out += ",\"timestamp\":";
  canonical_append_number(e.timestamp, out);
  out += "}\n";
}

std::string to_json_line(const CqiEvent& event) {
  std::string out;
  append_json_line(event, out);
  return out;
}

std::uint64_t CqiLog::record(CqiEvent event) {
  if (!std::isfinite(event.timestamp)) throw Error(ErrorCode::MalformedEvent, "non-finite timestamp");
  if (event.pump_id.empty()) throw Error(ErrorCode::MalformedEvent, "pump_id is empty");
  if (!event.payload.is_object()) throw Error(ErrorCode::MalformedEvent, "payload must be an object");
  if (event.kind == CqiKind::OverrideApproved) {
    const auto& ids = event.operator_ids;
    if (ids.size() != 2 || ids[0] == ids[1] || ids[0].empty() || ids[1].empty())
      throw Error(ErrorCode::MalformedEvent, "override needs exactly two distinct approvers");
  }
  if (!events_.empty() && event.timestamp < events_.back().timestamp)
    throw Error(ErrorCode::TimestampRegression,
                number_text(event.timestamp) + " < " + number_text(events_.back().timestamp));
  event.seq = events_.empty() ? 1 : events_.back().seq + 1;
  events_.push_back(std::move(event));
  return events_.back().seq;
}

bool SignOffTranscript::complete() const {
  if (required_signers.empty()) return false;
  return std::all_of(required_signers.begin(), required_signers.end(), [&](const Operator& op) {
    return std::any_of(signatures.begin(), signatures.end(), [&](const Signature& s) {
      return s.operator_id == op.operator_id && s.digest == digest;
    });
  });
}

std::string transcript_digest(std::span<const CqiEvent> events) {
  std::string bytes;
  for (const auto& e : events) append_json_line(e, bytes);
  return sha256_hex(bytes);
}

SignOffTranscript build_transcript(const CqiLog& log, std::string_view episode_id) {
  SignOffTranscript t;
  t.episode_id = std::string(episode_id);
  std::optional<EpisodeState> last_state;
  for (const auto& e : log.events()) {
    if (e.episode_id != episode_id) continue;
    if (auto it = e.payload.find("state"); it != e.payload.end() && it->is_string())
      last_state = episode_state_from_string(it->get<std::string>());
    if (e.kind == CqiKind::Signed) continue;
    if (e.kind == CqiKind::EpisodeOpened) {
      t.pump_id = e.pump_id;
      t.required_signers.push_back({e.payload.at("commanding").get<std::string>(), Role::Commanding});
      for (const auto& id : e.payload.at("executives"))
        t.required_signers.push_back({id.get<std::string>(), Role::Executive});
    }
    t.events.push_back(e);
  }
  if (t.events.empty()) throw Error(ErrorCode::UnknownEpisode, std::string(episode_id));
  if (t.required_signers.empty())
    throw Error(ErrorCode::MalformedEvent, "episode has no EpisodeOpened record");
  const bool closed = last_state && (*last_state == EpisodeState::SignOffPending ||
                                     *last_state == EpisodeState::Aborted ||
                                     *last_state == EpisodeState::Blocked ||
                                     *last_state == EpisodeState::SignedOff);
  if (!closed)
    throw Error(ErrorCode::EpisodeStillActive,
                std::string(episode_id) + " is " +
                    (last_state ? std::string(to_string(*last_state)) : std::string("unknown")));
  t.digest = transcript_digest(t.events);
  return t;
}

bool sign(SignOffTranscript& transcript, Episode& episode, std::string_view operator_id,
          double now, CqiLog& log) {
  if (transcript.episode_id != episode.episode_id())
    throw Error(ErrorCode::UnknownEpisode, "transcript does not belong to " + episode.episode_id());
  auto signer = std::find_if(transcript.required_signers.begin(), transcript.required_signers.end(),
                             [&](const Operator& o) { return o.operator_id == operator_id; });
  if (signer == transcript.required_signers.end() || !episode.is_member(operator_id))
    throw Error(ErrorCode::UnknownOperator, std::string(operator_id));
  const bool dup = std::any_of(transcript.signatures.begin(), transcript.signatures.end(),
                               [&](const Signature& s) { return s.operator_id == operator_id; });
  if (dup) throw Error(ErrorCode::DuplicateSignature, std::string(operator_id));

  transcript.signatures.push_back(Signature{std::string(operator_id), signer->role, now, transcript.digest});
  const bool complete = transcript.complete();
  if (complete && episode.state() == EpisodeState::SignOffPending)
    episode.finalize_sign_off(transcript, now, log);
  episode.emit(CqiKind::Signed, {std::string(operator_id)},
               {{"digest", transcript.digest}, {"role", std::string(to_string(signer->role))}}, now,
               log);
  return complete;
}

std::string render_printout(const SignOffTranscript& t) {
  if (!t.complete()) throw Error(ErrorCode::IncompleteSignOff, t.episode_id);
  std::ostringstream out;
  out << "CQI PRINT-OUT episode=" << t.episode_id << " pump=" << t.pump_id << "\n";
  out << "digest=" << t.digest << "\n";
  for (const auto& e : t.events) {
    out << e.seq << " t=" << number_text(e.timestamp) << " " << to_string(e.kind);
    if (!e.operator_ids.empty()) {
      out << " by=";
      for (std::size_t i = 0; i < e.operator_ids.size(); ++i)
        out << (i ? ";" : "") << e.operator_ids[i];
    }
    out << " " << canonical_dump(e.payload) << "\n";
  }
  for (const auto& s : t.signatures)
    out << "SIGNED " << s.operator_id << " (" << to_string(s.role) << ") t=" << number_text(s.at)
        << "\n";
  return out.str();
}

std::string export_cqi(std::span<const CqiEvent> events, ExportFormat format) {
  std::string out;
  if (format == ExportFormat::JsonLines) {
    for (const auto& e : events) append_json_line(e, out);
    return out;
  }
  out = "seq,timestamp,pump_id,episode_id,kind,operator_ids,payload\n";
  for (const auto& e : events) {
    std::string ids;
    for (std::size_t i = 0; i < e.operator_ids.size(); ++i)
      ids += (i ? ";" : "") + e.operator_ids[i];
    out += std::to_string(e.seq) + "," + number_text(e.timestamp) + "," + csv_field(e.pump_id) +
           "," + csv_field(e.episode_id) + "," + std::string(to_string(e.kind)) + "," +
           csv_field(ids) + "," + csv_field(canonical_dump(e.payload), true) + "\n";
  }
  return out;
}

std::vector<CqiEvent> import_jsonl(std::string_view text) {
  std::vector<CqiEvent> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json doc;
    try {
      doc = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedEvent, e.what());
    }
    events.push_back(cqi_event_from_json(doc));
  }
  return events;
}

AnalyticsReport analyze(std::span<const CqiEvent> events) {
  using EpisodeKey = std::pair<std::string, std::string>;
  struct Tally {
    std::set<EpisodeKey> episodes;
    std::uint64_t soft_alerts = 0;
    std::uint64_t overrides = 0;
  };

  std::set<EpisodeKey> episodes;
  std::map<std::string, Tally> drugs;
  std::set<std::string> budget;
  std::set<std::string> no_library;
  AnalyticsReport report;

  for (const auto& e : events) {
    EpisodeKey key{e.pump_id, e.episode_id};
    episodes.insert(key);
    const std::string drug = payload_string(e, "drug_id");
    switch (e.kind) {
      case CqiKind::Verdict:
      case CqiKind::NoLibraryMode:
        if (!drug.empty()) drugs[drug].episodes.insert(key);
        if (e.kind == CqiKind::NoLibraryMode) no_library.insert(e.episode_id);
        break;
      case CqiKind::Alarm:
        ++report.alerts;
        if (payload_string(e, "alarm_kind") == "SoftLimit") {
          ++report.soft_alerts;
          if (!drug.empty()) ++drugs[drug].soft_alerts;
        }
        break;
      case CqiKind::OverrideApproved:
        ++report.overrides;
        if (!drug.empty()) ++drugs[drug].overrides;
        break;
      case CqiKind::OverrideBudgetWarning:
        budget.insert(e.episode_id);
        break;
      default:
        break;
    }
  }

  auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  report.episodes = episodes.size();
  report.alert_rate_per_episode = ratio(report.alerts, report.episodes);
  report.soft_alert_override_fraction = ratio(report.overrides, report.soft_alerts);
  for (const auto& [id, tally] : drugs) {
    DrugStats s;
    s.drug_id = id;
    s.episodes = tally.episodes.size();
    s.soft_alerts = tally.soft_alerts;
    s.overrides = tally.overrides;
    s.override_rate = ratio(s.overrides, s.episodes);
    s.soft_alert_override_fraction = ratio(s.overrides, s.soft_alerts);
    report.drugs.push_back(std::move(s));
  }
  std::stable_sort(report.drugs.begin(), report.drugs.end(), [](const DrugStats& a, const DrugStats& b) {
    if (a.override_rate != b.override_rate) return a.override_rate > b.override_rate;
    return a.drug_id < b.drug_id;
  });
  report.budget_flagged_episodes.assign(budget.begin(), budget.end());
  report.no_library_episodes.assign(no_library.begin(), no_library.end());
  return report;
}

Json to_json(const AnalyticsReport& r) {
  Json drugs = Json::array();
  for (const auto& d : r.drugs) {
    drugs.push_back({{"drug_id", d.drug_id},
                     {"episodes", d.episodes},
                     {"soft_alerts", d.soft_alerts},
                     {"overrides", d.overrides},
                     {"override_rate", d.override_rate},
                     {"soft_alert_override_fraction", d.soft_alert_override_fraction}});
  }
  return {{"episodes", r.episodes},
          {"alerts", r.alerts},
          {"alert_rate_per_episode", r.alert_rate_per_episode},
          {"soft_alerts", r.soft_alerts},
          {"overrides", r.overrides},
          {"soft_alert_override_fraction", r.soft_alert_override_fraction},
          {"drugs", std::move(drugs)},
          {"budget_flagged_episodes", r.budget_flagged_episodes},
          {"no_library_episodes", r.no_library_episodes}};
}

std::string to_csv(const AnalyticsReport& r) {
  std::string out = "drug_id,episodes,soft_alerts,overrides,override_rate,soft_alert_override_fraction\n";
  for (const auto& d : r.drugs) {
    out += csv_field(d.drug_id) + "," + std::to_string(d.episodes) + "," +
           std::to_string(d.soft_alerts) + "," + std::to_string(d.overrides) + "," +
           number_text(d.override_rate) + "," + number_text(d.soft_alert_override_fraction) + "\n";
  }
  auto join = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ";" : "") + ids[i];
    return s;
  };
  out += "\nmetric,value\n";
  out += "episodes," + std::to_string(r.episodes) + "\n";
  out += "alerts," + std::to_string(r.alerts) + "\n";
  out += "alert_rate_per_episode," + number_text(r.alert_rate_per_episode) + "\n";
  out += "soft_alerts," + std::to_string(r.soft_alerts) + "\n";
  out += "overrides," + std::to_string(r.overrides) + "\n";
  out += "soft_alert_override_fraction," + number_text(r.soft_alert_override_fraction) + "\n";
  out += "budget_flagged_episodes," + csv_field(join(r.budget_flagged_episodes)) + "\n";
  out += "no_library_episodes," + csv_field(join(r.no_library_episodes)) + "\n";
  return out;
}

}  // namespace ivc
