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


// Serial reference against the OpenMP runner on the shipped scenarios.

#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "ivc/simulator.hpp"

namespace {

ivc::Scenario load(const char* name, std::uint64_t trials) {
  std::ifstream in(std::string(IVC_DATA_DIR "/") + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  ivc::Scenario s = ivc::parse_scenario(ss.str(), IVC_DATA_DIR);
  s.trials = trials;
  return s;
}

void run(benchmark::State& state, const char* scenario, bool parallel) {
  const auto s = load(scenario, static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) {
    auto result = parallel ? ivc::run_monte_carlo(s) : ivc::run_monte_carlo_serial(s);
    benchmark::DoNotOptimize(result.report.counts);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Serial(benchmark::State& state, const char* scenario) { run(state, scenario, false); }
void BM_OpenMP(benchmark::State& state, const char* scenario) { run(state, scenario, true); }

void BM_Oracle(benchmark::State& state) {
  const auto s = load("scenario_fatigue.json", 1);
  for (auto _ : state) benchmark::DoNotOptimize(ivc::oracle_undetected_probability(s));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Serial, concurrence, "scenario_concurrence.json")
    ->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_OpenMP, concurrence, "scenario_concurrence.json")
    ->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Serial, fatigue, "scenario_fatigue.json")
    ->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_OpenMP, fatigue, "scenario_fatigue.json")
    ->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Oracle)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
