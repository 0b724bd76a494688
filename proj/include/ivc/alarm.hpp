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

#include <string>
#include <string_view>
#include <vector>

namespace ivc {

enum class AlarmKind {
  SoftLimit,
  HardLimit,
  Occlusion,
  AirInLine,
  SecondaryBagMisalignment,
  SecondaryClampMaladjustment,
  TubeLayoutFault,
  OverrideBudgetExceeded,
  WrongPumpRouting,
};

std::string_view to_string(AlarmKind kind);
AlarmKind alarm_kind_from_string(std::string_view text);

struct AlarmAck {
  std::string operator_id;
  double at = 0.0;

  friend bool operator==(const AlarmAck&, const AlarmAck&) = default;
};

struct AlarmEvent {
  std::string alarm_id;
  AlarmKind kind = AlarmKind::Occlusion;
  bool clinically_significant = true;
  double raised_at = 0.0;
  std::vector<AlarmAck> acks;

  /// Two distinct acknowledgments for significant alarms, one otherwise.
  std::size_t required_acks() const noexcept { return clinically_significant ? 2 : 1; }
  bool closed() const noexcept { return acks.size() >= required_acks(); }

  friend bool operator==(const AlarmEvent&, const AlarmEvent&) = default;
};

}  // namespace ivc
