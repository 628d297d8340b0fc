// Serial reference vs OpenMP paths of the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <memory>

#include "probscale/calibration.hpp"
#include "probscale/kernel_predictor.hpp"
#include "probscale/kernels.hpp"
#include "probscale/synthetic.hpp"

using namespace probscale;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

const Dataset& validation_rows() {
  static const Dataset data = sample_example(100000, ExampleConfig{}, SampleStream::kValidation);
  return data;
}

void BM_CountExceedances(benchmark::State& state) {
  const auto& data = validation_rows();
  const auto preds = evaluate_predictions(oracle_predictor(), data);
  const auto bounds = evaluate_bounds([](std::span<const double> x) { return exact_bound(x[0], 0.05); }, data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(count_exceedances(data.ys(), preds, bounds, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(data.size()));
}

void BM_OraclePairs(benchmark::State& state) {
  const auto& data = validation_rows();
  const ModelPair pair{oracle_predictor(), exact_sigma_handle()};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pairs(pair, data, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(data.size()));
}

void BM_KernelPairs(benchmark::State& state) {
  static const auto train = std::make_shared<const Dataset>(sample_example(2065, ExampleConfig{}, SampleStream::kTraining));
  static const auto queries = sample_example(256, ExampleConfig{}, SampleStream::kCalibration);
  FamilyConfig fc;
  fc.lambdas = {1.0};
  static const auto family = build_family(train, fc);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pairs(family[0], queries, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(queries.size()));
}

void BM_Gram(benchmark::State& state) {
  static const auto train = sample_example(2065, ExampleConfig{}, SampleStream::kTraining);
  for (auto _ : state) benchmark::DoNotOptimize(compute_gram(train, KernelConfig{}, mode(state)));
}

void BM_Coverage(benchmark::State& state) {
  CoverageConfig cfg;
  cfg.repetitions = 50;
  cfg.validation_size = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(run_coverage_experiment(cfg, mode(state)));
}

}  // namespace

// Argument 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_CountExceedances)->Arg(0)->Arg(1);
BENCHMARK(BM_OraclePairs)->Arg(0)->Arg(1);
BENCHMARK(BM_KernelPairs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Coverage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
