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

#include "ivc/pump_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ivc/errors.hpp"

namespace ivc {

namespace {

constexpr std::array kAlarmNames = {
    "SoftLimit",
    "HardLimit",
    "Occlusion",
    "AirInLine",
    "SecondaryBagMisalignment",
    "SecondaryClampMaladjustment",
    "TubeLayoutFault",
    "OverrideBudgetExceeded",
    "WrongPumpRouting",
};

}  // namespace

std::string_view to_string(AlarmKind kind) { return kAlarmNames[static_cast<std::size_t>(kind)]; }

AlarmKind alarm_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kAlarmNames.size(); ++i)
    if (text == kAlarmNames[i]) return static_cast<AlarmKind>(i);
  throw Error(ErrorCode::MalformedDocument, "unknown alarm kind '" + std::string(text) + "'");
}

std::string_view to_string(PumpState state) {
  switch (state) {
    case PumpState::Idle: return "Idle";
    case PumpState::Infusing: return "Infusing";
    case PumpState::Paused: return "Paused";
    case PumpState::Stopped: return "Stopped";
    case PumpState::Done: return "Done";
  }
  return "?";
}

Pump::Pump(std::string pump_id) : pump_id_(std::move(pump_id)) {}

void Pump::arm(Episode& episode, double now, CqiLog& log) {
  if (episode.pump_id() != pump_id_)
    throw Error(ErrorCode::NotConcurred, "episode is bound to pump " + episode.pump_id());
  if (episode.state() != EpisodeState::ReadyToActuate)
    throw Error(ErrorCode::NotConcurred,
                "episode " + episode.episode_id() + " is " + std::string(to_string(episode.state())));
  if (state_ != PumpState::Idle) throw Error(ErrorCode::PumpBusy, pump_id_);

  episode.begin_running(now, log);
  program_ = *episode.agreed_program();
  episode_id_ = episode.episode_id();
  infused_ml_ = 0.0;
  remaining_ml_ = program_->vtbi_ml;
  open_alarms_.clear();
  state_ = PumpState::Infusing;
}

std::vector<AlarmEvent> Pump::step(Episode& episode, double dt_hours,
                                   std::span<const FaultTrigger> faults, double now, CqiLog& log) {
  if (!(std::isfinite(dt_hours) && dt_hours > 0.0))
    throw Error(ErrorCode::InvalidStep, "dt must be positive");
  if (episode.episode_id() != episode_id_ || episode.pump_id() != pump_id_)
    throw Error(ErrorCode::NotRunning, "episode is not bound to this pump");
  if (state_ == PumpState::Paused && episode.state() == EpisodeState::Running) {
    open_alarms_.clear();
    state_ = PumpState::Infusing;
  }
  if (state_ != PumpState::Infusing || episode.state() != EpisodeState::Running)
    throw Error(ErrorCode::NotRunning, "pump " + std::string(to_string(state_)) + ", episode " +
                                           std::string(to_string(episode.state())));

  std::vector<AlarmEvent> raised;
  if (!faults.empty()) {
    for (const auto& f : faults) {
      raised.push_back(episode.raise_alarm(f.kind, f.clinically_significant, now, log, true));
      open_alarms_.push_back(raised.back());
    }
    state_ = PumpState::Paused;
    return raised;
  }

  const double vtbi = program_->vtbi_ml;
  const double delta = std::min(program_->rate_ml_per_h * dt_hours, remaining_ml_);
  infused_ml_ = std::min(vtbi, infused_ml_ + delta);
  remaining_ml_ = vtbi - infused_ml_;
  if (remaining_ml_ <= 0.0) {
    remaining_ml_ = 0.0;
    infused_ml_ = vtbi;
    state_ = PumpState::Done;
    episode.complete_infusion(now + dt_hours, log);
  }
  return raised;
}

void Pump::stop(double now, CqiLog& log) {
  if (state_ != PumpState::Infusing && state_ != PumpState::Paused)
    throw Error(ErrorCode::WrongState, "pump is " + std::string(to_string(state_)));
  state_ = PumpState::Stopped;
  CqiEvent event;
  event.timestamp = now;
  event.pump_id = pump_id_;
  event.episode_id = episode_id_;
  event.kind = CqiKind::Stop;
  event.payload = {{"infused_ml", infused_ml_}, {"remaining_ml", remaining_ml_}};
  log.record(std::move(event));
}

void Pump::release() {
  if (state_ != PumpState::Done && state_ != PumpState::Stopped && state_ != PumpState::Idle)
    throw Error(ErrorCode::PumpBusy, pump_id_);
  state_ = PumpState::Idle;
  program_.reset();
  episode_id_.clear();
  infused_ml_ = 0.0;
  remaining_ml_ = 0.0;
  open_alarms_.clear();
}

}  // namespace ivc
