#include <benchmark/benchmark.h>

#include "embodied/behavior_dim.hpp"
#include "embodied/crbm.hpp"
#include "embodied/pipeline.hpp"
#include "embodied/worlds.hpp"

using namespace embodied;

namespace {

const WalkerSystem& big_walker() {
  static const WalkerSystem w = [] {
    CyclicWalkerConfig c;
    c.phases = 12;
    c.actions = 4;
    c.track_length = 100;
    return make_cyclic_walker(c);
  }();
  return w;
}

void BM_BehaviorMap(benchmark::State& state) {
  const auto& w = big_walker();
  const auto pi = StochasticKernel::uniform(w.sml.sensor_card(), w.sml.actuator_card());
  for (auto _ : state) benchmark::DoNotOptimize(behavior_map(w.sml, pi));
}

void BM_BehaviorMapSerial(benchmark::State& state) {
  const auto& w = big_walker();
  const auto pi = StochasticKernel::uniform(w.sml.sensor_card(), w.sml.actuator_card());
  for (auto _ : state) benchmark::DoNotOptimize(behavior_map_serial(w.sml, pi));
}

CrbmParams wide_crbm() {
  Rng rng(3);
  return CrbmParams::random(8, 14, 16, 0.5, rng);
}

void BM_ExactConditional(benchmark::State& state) {
  const CrbmParams p = wide_crbm();
  const Bits y(8, 1);
  for (auto _ : state) benchmark::DoNotOptimize(exact_conditional(p, y));
}

void BM_ExactConditionalSerial(benchmark::State& state) {
  const CrbmParams p = wide_crbm();
  const Bits y(8, 1);
  for (auto _ : state) benchmark::DoNotOptimize(exact_conditional_serial(p, y));
}

ExperimentConfig scan_config() {
  ExperimentConfig cfg;
  cfg.train_steps = 300;
  cfg.restarts = 4;
  cfg.evals_per_model = 2;
  cfg.eval_steps = 60;
  cfg.train.epochs = 5;
  return cfg;
}

void BM_Scan(benchmark::State& state) {
  const ExperimentConfig cfg = scan_config();
  const WalkerSystem w = make_cyclic_walker(cfg.walker);
  const auto data = collect_training_data(w, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_scan_stage(w, cfg, data, 1, 4));
}

void BM_ScanSerial(benchmark::State& state) {
  const ExperimentConfig cfg = scan_config();
  const WalkerSystem w = make_cyclic_walker(cfg.walker);
  const auto data = collect_training_data(w, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_scan_stage_serial(w, cfg, data, 1, 4));
}

}  // namespace

BENCHMARK(BM_BehaviorMap)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BehaviorMapSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExactConditional)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExactConditionalSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Scan)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScanSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
