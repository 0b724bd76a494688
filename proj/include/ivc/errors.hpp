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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivc {

/// Every failure the library reports carries one of these codes. The names
/// are stable and appear verbatim in CLI diagnostics.
enum class ErrorCode {
  // drug library
  MalformedDocument,
  LimitOrderViolation,
  DuplicateEntry,
  NonPositiveConcentration,
  EntryNotFound,
  MissingWeight,
  UnitMismatch,
  DrugMismatch,
  // concurrence
  DuplicateOperator,
  NoExecutive,
  NotAnEnteringOperator,
  DuplicateSubmission,
  WrongState,
  ReadOutRequired,
  HardLimitNotOverridable,
  UnknownOperator,
  UnknownAlarm,
  DuplicateAck,
  InvalidProgram,
  // pump
  NotConcurred,
  PumpBusy,
  NotRunning,
  InvalidStep,
  // audit
  TimestampRegression,
  MalformedEvent,
  UnknownEpisode,
  EpisodeStillActive,
  DuplicateSignature,
  IncompleteSignOff,
  // simulator
  InvalidScenario,
  SpaceTooLarge,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivc
