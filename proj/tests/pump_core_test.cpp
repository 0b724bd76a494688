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


#include <gtest/gtest.h>

#include <array>

#include "ivc/concurrence.hpp"
#include "ivc/errors.hpp"
#include "ivc/pump_core.hpp"
#include "test_support.hpp"

using namespace ivc;
using namespace ivc::testing;

namespace {

template <class F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::MalformedDocument;
}

class PumpTest : public ::testing::Test {
 protected:
  // Wide rate band so that 100 mL/h passes.
  DrugLibrary lib{1, {entry("D1", "ICU", DosingUnit::MgPerH, band(1, 2, 7, 8))}};
  CqiLog log;
  Pump pump{"P1"};

  Episode ready(double rate, double vtbi, std::string pump_id = "P1") {
    Episode ep = Episode::open("EP", pump_id, {"C", Role::Commanding}, {{"E1", Role::Executive}}, 0.0, log);
    ep.submit_entry("E1", program(5, rate, vtbi), 0.0, log);
    ep.submit_entry("C", program(5, rate, vtbi), 0.0, log);
    ep.compare_entries(0.0, log);
    ep.review(lib, 0.0, log);
    return ep;
  }
};

}  // namespace

TEST_F(PumpTest, ArmFromReady) {
  Episode ep = ready(100, 50);
  pump.arm(ep, 0.0, log);
  EXPECT_EQ(pump.state(), PumpState::Infusing);
  EXPECT_EQ(ep.state(), EpisodeState::Running);
  EXPECT_EQ(pump.remaining_ml(), 50.0);
  EXPECT_EQ(log.events().back().kind, CqiKind::Actuation);
  EXPECT_EQ(log.events().back().operator_ids, (std::vector<std::string>{"E1", "C"}));
}

TEST_F(PumpTest, ArmRefusedWithoutConcurrence) {
  Episode ep = Episode::open("EP", "P1", {"C", Role::Commanding}, {{"E1", Role::Executive}}, 0.0, log);
  ep.submit_entry("E1", program(5), 0.0, log);
  ep.submit_entry("C", program(6), 0.0, log);
  ep.compare_entries(0.0, log);
  ASSERT_EQ(ep.state(), EpisodeState::Mismatch);
  EXPECT_EQ(code_of([&] { pump.arm(ep, 0.0, log); }), ErrorCode::NotConcurred);
  EXPECT_EQ(pump.state(), PumpState::Idle);
}

TEST_F(PumpTest, ArmWhileBusy) {
  Episode ep = ready(100, 50);
  pump.arm(ep, 0.0, log);
  Episode other = ready(100, 50);
  EXPECT_EQ(code_of([&] { pump.arm(other, 0.0, log); }), ErrorCode::PumpBusy);
  Episode elsewhere = ready(100, 50, "P2");
  EXPECT_EQ(code_of([&] { pump.arm(elsewhere, 0.0, log); }), ErrorCode::NotConcurred);
}

TEST_F(PumpTest, StepArithmetic) {
  Episode ep = ready(100, 50);
  pump.arm(ep, 0.0, log);
  pump.step(ep, 0.25, {}, 0.0, log);
  EXPECT_DOUBLE_EQ(pump.infused_ml(), 25.0);
  EXPECT_DOUBLE_EQ(pump.remaining_ml(), 25.0);
  EXPECT_EQ(pump.state(), PumpState::Infusing);
}

TEST_F(PumpTest, StepClampsAtVtbi) {
  Episode ep = ready(100, 10);
  pump.arm(ep, 0.0, log);
  pump.step(ep, 0.25, {}, 0.0, log);
  EXPECT_EQ(pump.infused_ml(), 10.0);
  EXPECT_EQ(pump.remaining_ml(), 0.0);
  EXPECT_EQ(pump.state(), PumpState::Done);
  EXPECT_EQ(ep.state(), EpisodeState::SignOffPending);
  EXPECT_EQ(code_of([&] { pump.step(ep, 0.25, {}, 0.25, log); }), ErrorCode::NotRunning);
}

TEST_F(PumpTest, OcclusionPausesWithoutDelivery) {
  Episode ep = ready(100, 50);
  pump.arm(ep, 0.0, log);
  const std::array<FaultTrigger, 1> f{{{AlarmKind::Occlusion, true}}};
  const auto raised = pump.step(ep, 0.25, f, 0.0, log);
  ASSERT_EQ(raised.size(), 1u);
  EXPECT_EQ(raised[0].kind, AlarmKind::Occlusion);
  EXPECT_EQ(pump.state(), PumpState::Paused);
  EXPECT_EQ(ep.state(), EpisodeState::AlarmPending);
  EXPECT_EQ(pump.open_alarms().size(), 1u);
  EXPECT_EQ(pump.infused_ml(), 0.0);
  EXPECT_EQ(code_of([&] { pump.step(ep, 0.25, {}, 0.25, log); }), ErrorCode::NotRunning);

  ep.acknowledge_alarm(raised[0].alarm_id, "E1", 0.25, log);
  ep.acknowledge_alarm(raised[0].alarm_id, "C", 0.25, log);
  pump.step(ep, 0.25, {}, 0.25, log);
  EXPECT_EQ(pump.state(), PumpState::Infusing);
  EXPECT_DOUBLE_EQ(pump.infused_ml(), 25.0);
}

TEST_F(PumpTest, StopCases) {
  Episode ep = ready(100, 50);
  pump.arm(ep, 0.0, log);
  pump.stop(0.0, log);
  EXPECT_EQ(pump.state(), PumpState::Stopped);
  EXPECT_EQ(log.events().back().kind, CqiKind::Stop);
  pump.release();

  Episode ep2 = ready(100, 50);
  pump.arm(ep2, 0.0, log);
  const std::array<FaultTrigger, 1> f{{{AlarmKind::AirInLine, true}}};
  pump.step(ep2, 0.25, f, 0.0, log);
  pump.stop(0.0, log);
  EXPECT_EQ(pump.state(), PumpState::Stopped);
  pump.release();

  Episode ep3 = ready(100, 10);
  pump.arm(ep3, 0.0, log);
  pump.step(ep3, 0.25, {}, 0.0, log);
  EXPECT_EQ(code_of([&] { pump.stop(0.25, log); }), ErrorCode::WrongState);
}

TEST_F(PumpTest, RejectsNonPositiveStep) {
  Episode ep = ready(100, 50);
  pump.arm(ep, 0.0, log);
  EXPECT_EQ(code_of([&] { pump.step(ep, 0.0, {}, 0.0, log); }), ErrorCode::InvalidStep);
}

TEST_F(PumpTest, ConservationOverOddSteps) {
  Episode ep = ready(7.3, 11.1);
  pump.arm(ep, 0.0, log);
  double t = 0.0;
  while (pump.state() == PumpState::Infusing) {
    pump.step(ep, 0.0917, {}, t, log);
    t += 0.0917;
    ASSERT_LE(std::abs(pump.infused_ml() + pump.remaining_ml() - 11.1), 1e-9);
  }
  EXPECT_EQ(pump.state(), PumpState::Done);
}
