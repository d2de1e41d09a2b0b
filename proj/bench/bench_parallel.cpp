/*
 Copyright 2026 The smhe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
// Serial reference against the OpenMP kernels: seed sweeps, concurrent
// budgets and the envelope fit over the rate grid.

#include "smhe/analysis.hpp"
#include "smhe/harness.hpp"

#include <benchmark/benchmark.h>

using namespace smhe;

namespace {

ExperimentConfig bench_config() {
  ExperimentConfig cfg = ExperimentConfig::batch_reactor();
  cfg.aggregate_seeds = 0;
  return cfg;
}

void BM_SeedSweepSerial(benchmark::State& state) {
  const ExperimentConfig cfg = bench_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_seed_sweep_serial(cfg, static_cast<int>(state.range(0))));
}

void BM_SeedSweepOpenMP(benchmark::State& state) {
  const ExperimentConfig cfg = bench_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_seed_sweep(cfg, static_cast<int>(state.range(0))));
}

void BM_BudgetsSequential(benchmark::State& state) {
  ExperimentConfig cfg = bench_config();
  cfg.parallel = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}

void BM_BudgetsConcurrent(benchmark::State& state) {
  ExperimentConfig cfg = bench_config();
  cfg.parallel = true;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}

std::vector<EnvelopeSample> fit_samples() {
  const ExperimentConfig cfg = bench_config();
  const auto& f = cfg.detectability_fit;
  return detectability_samples(*build_pipeline(cfg).model, f.lower, f.upper, cfg.Q, 200, 200, f.seed);
}

void BM_EnvelopeFitSerial(benchmark::State& state) {
  const auto samples = fit_samples();
  const auto grid = default_rate_grid();
  for (auto _ : state) benchmark::DoNotOptimize(fit_envelope_serial(samples, grid));
}

void BM_EnvelopeFitOpenMP(benchmark::State& state) {
  const auto samples = fit_samples();
  const auto grid = default_rate_grid();
  for (auto _ : state) benchmark::DoNotOptimize(fit_envelope(samples, grid));
}

}  // namespace

BENCHMARK(BM_SeedSweepSerial)->Arg(4)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SeedSweepOpenMP)->Arg(4)->Arg(20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BudgetsSequential)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BudgetsConcurrent)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnvelopeFitSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnvelopeFitOpenMP)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
