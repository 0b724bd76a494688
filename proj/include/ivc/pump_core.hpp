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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivc/alarm.hpp"
#include "ivc/audit_cqi.hpp"
#include "ivc/concurrence.hpp"

namespace ivc {

enum class PumpState { Idle, Infusing, Paused, Stopped, Done };

std::string_view to_string(PumpState state);

/// A sensed (here: injected) fault condition for one step.
struct FaultTrigger {
  AlarmKind kind = AlarmKind::Occlusion;
  bool clinically_significant = true;
};

/// Simulated single-channel pump. Time is supplied by the caller; the pump
/// never reads a clock. Actuation is refused unless the bound episode has
/// concurred.
class Pump {
 public:
  explicit Pump(std::string pump_id);

  const std::string& pump_id() const noexcept { return pump_id_; }
  PumpState state() const noexcept { return state_; }
  const std::optional<InfusionProgram>& program() const noexcept { return program_; }
  const std::string& episode_id() const noexcept { return episode_id_; }
  double infused_ml() const noexcept { return infused_ml_; }
  double remaining_ml() const noexcept { return remaining_ml_; }
  const std::vector<AlarmEvent>& open_alarms() const noexcept { return open_alarms_; }

  /// Loads the concurred program and starts infusing. Throws NotConcurred
  /// unless the episode is ReadyToActuate for this pump, PumpBusy unless Idle.
  void arm(Episode& episode, double now, CqiLog& log);

  /// Advances simulated time by dt hours. Injected faults pause the pump
  /// and put the episode into AlarmPending instead of infusing. A paused
  /// pump whose alarms have all been acknowledged resumes first.
  std::vector<AlarmEvent> step(Episode& episode, double dt_hours,
                               std::span<const FaultTrigger> faults, double now, CqiLog& log);

  /// Infusing or Paused -> Stopped.
  void stop(double now, CqiLog& log);

  /// Done or Stopped -> Idle, ready for the next episode.
  void release();

 private:
  std::string pump_id_;
  PumpState state_ = PumpState::Idle;
  std::optional<InfusionProgram> program_;
  std::string episode_id_;
  double infused_ml_ = 0.0;
  double remaining_ml_ = 0.0;
  std::vector<AlarmEvent> open_alarms_;
};

}  // namespace ivc
