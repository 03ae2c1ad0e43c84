// Copyright 2026 The qiopa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <numbers>

#include <benchmark/benchmark.h>

#include "qiopa/channel.hpp"
#include "qiopa/fock.hpp"
#include "qiopa/mc.hpp"
#include "qiopa/metrology.hpp"
#include "qiopa/rng.hpp"

namespace {

using namespace qiopa;

void BM_Philox(benchmark::State& state) {
  CounterRng rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng());
}
BENCHMARK(BM_Philox);

// Exact inversion below the switchover, normal draw above it.
void BM_BinomialSample(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  CounterRng rng(2, 0);
  for (auto _ : state) benchmark::DoNotOptimize(binomial_sample(n, 0.3, rng));
}
BENCHMARK(BM_BinomialSample)->Arg(10)->Arg(1000)->Arg(100000)->Arg(10000000);

void BM_SectorBuild(benchmark::State& state) {
  const auto gp = GainParams::from_gain(static_cast<double>(state.range(0)) / 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(SectorPair::build(gp));
}
BENCHMARK(BM_SectorBuild)->Arg(2)->Arg(6)->Arg(9)->Unit(benchmark::kMicrosecond);

void BM_SampleDetectedCounts(benchmark::State& state) {
  ChannelParams ch;
  ch.p = 0.15;
  ch.eta = 3e-4;
  const auto source = build_source_law(std::numbers::pi / 2, GainParams::from_gain(static_cast<double>(state.range(0)) / 2.0), ch);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    CounterRng rng(3, stream++);
    benchmark::DoNotOptimize(sample_detected_counts(source, ch.eta, rng));
  }
}
BENCHMARK(BM_SampleDetectedCounts)->Arg(0)->Arg(4)->Arg(9);

void BM_DetectedJointLaw(benchmark::State& state) {
  ChannelParams ch;
  ch.p = 0.2;
  ch.eta = 1e-4;
  const auto source = build_source_law(std::numbers::pi / 2, GainParams::from_gain(static_cast<double>(state.range(0))), ch);
  for (auto _ : state) benchmark::DoNotOptimize(DetectedJointLaw(source, ch.eta));
}
BENCHMARK(BM_DetectedJointLaw)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ExactFisher(benchmark::State& state) {
  ChannelParams ch;
  ch.p = 0.2;
  ch.eta = 1e-4;
  const auto gp = GainParams::from_gain(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(classical_fisher_information(std::numbers::pi / 2, gp, ch, FisherMethod::exact));
  }
}
BENCHMARK(BM_ExactFisher)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
