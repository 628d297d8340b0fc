#pragma once

// Scalar benchmark y = (10 + n1)·x + 10·sin(4x) + 5 + n2 with x ~ U[x_low, x_high],
// n1 ~ N(0, slope_noise_var), n2 ~ N(0, additive_noise_var). Given x the
// error of the optimal predictor is N(0, 7x² + 3) under the defaults.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "probscale/calibration.hpp"
#include "probscale/dataset.hpp"
#include "probscale/kernels.hpp"
#include "probscale/levels.hpp"
#include "probscale/sample_complexity.hpp"

namespace probscale {

struct ExampleConfig {
  double x_low = -2.5;
  double x_high = 2.5;
  double slope_noise_var = 7.0;
  double additive_noise_var = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Named random streams. Data drawn from different streams of one seed never
/// share random inputs.
enum class SampleStream : std::uint64_t {
  kTraining = 1,
  kCalibration = 2,
  kValidation = 3,
  kSelection = 4,
};

/// Observation i of a draw starting at `first` consumes counters 3(first+i),
/// 3(first+i)+1, 3(first+i)+2 of the stream: x, n1, n2.
Dataset sample_example(std::size_t count, const ExampleConfig& cfg,
                       SampleStream stream = SampleStream::kCalibration, std::uint64_t first = 0);

/// Same layout on an explicit stream id (used for per-repetition streams).
Dataset sample_example_on(std::size_t count, const ExampleConfig& cfg, std::uint64_t stream_id,
                          std::uint64_t first = 0);

double oracle_value(double x) noexcept;
PredictorHandle oracle_predictor();

/// sqrt(slope_var·x² + additive_var); defaults give sqrt(7x² + 3).
double exact_sigma(double x, const ExampleConfig& cfg = {});
SigmaHandle exact_sigma_handle(const ExampleConfig& cfg = {});

/// γ_ε · exact_sigma(x).
double exact_bound(double x, double epsilon, const ExampleConfig& cfg = {});

enum class CoverageMode { kFixed, kConditioned };

struct CoverageConfig {
  std::size_t repetitions = 200;
  ProbabilityLevels levels{0.1, 0.2};
  std::size_t validation_size = 10000;
  double constant = kDefaultLemmaConstant;
  /// Overrides the constant-based rule when set.
  std::optional<SampleSpec> spec{};
  CoverageMode mode = CoverageMode::kFixed;
  ExampleConfig example{};

  void validate() const;
};

struct CoverageRun {
  /// ρ in fixed mode, γ̄ in conditioned mode.
  double bound;
  double violation_ratio;
  bool failed;
};

struct CoverageReport {
  double failure_fraction;
  std::size_t failures;
  std::size_t n_samples;
  std::size_t discard_rank;
  /// A run fails when its measured ratio exceeds ε + margin, margin = 3·sqrt(ε/validation_size).
  double margin;
  std::vector<CoverageRun> runs;
};

/// Repeats calibrate-then-validate with fresh, independent data per run.
/// Repetitions run in parallel on derived streams; the report does not
/// depend on the schedule.
CoverageReport run_coverage_experiment(const CoverageConfig& cfg, Execution exec = Execution::kParallel);

}  // namespace probscale
