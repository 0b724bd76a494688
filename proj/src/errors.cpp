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

#include "ivc/errors.hpp"

namespace ivc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::LimitOrderViolation: return "LimitOrderViolation";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::NonPositiveConcentration: return "NonPositiveConcentration";
    case ErrorCode::EntryNotFound: return "EntryNotFound";
    case ErrorCode::MissingWeight: return "MissingWeight";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::DrugMismatch: return "DrugMismatch";
    case ErrorCode::DuplicateOperator: return "DuplicateOperator";
    case ErrorCode::NoExecutive: return "NoExecutive";
    case ErrorCode::NotAnEnteringOperator: return "NotAnEnteringOperator";
    case ErrorCode::DuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::ReadOutRequired: return "ReadOutRequired";
    case ErrorCode::HardLimitNotOverridable: return "HardLimitNotOverridable";
    case ErrorCode::UnknownOperator: return "UnknownOperator";
    case ErrorCode::UnknownAlarm: return "UnknownAlarm";
    case ErrorCode::DuplicateAck: return "DuplicateAck";
    case ErrorCode::InvalidProgram: return "InvalidProgram";
    case ErrorCode::NotConcurred: return "NotConcurred";
    case ErrorCode::PumpBusy: return "PumpBusy";
    case ErrorCode::NotRunning: return "NotRunning";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::TimestampRegression: return "TimestampRegression";
    case ErrorCode::MalformedEvent: return "MalformedEvent";
    case ErrorCode::UnknownEpisode: return "UnknownEpisode";
    case ErrorCode::EpisodeStillActive: return "EpisodeStillActive";
    case ErrorCode::DuplicateSignature: return "DuplicateSignature";
    case ErrorCode::IncompleteSignOff: return "IncompleteSignOff";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::SpaceTooLarge: return "SpaceTooLarge";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code) {}

}  // namespace ivc
