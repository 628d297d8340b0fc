#include "probscale/synthetic.hpp"

#include <cmath>
#include <string>

#include "probscale/errors.hpp"
#include "probscale/order_statistics.hpp"
#include "probscale/rng.hpp"

namespace probscale {

void ExampleConfig::validate() const {
  // Degenerate settings (x pinned, zero noise) are allowed for testing.
  if (!(x_low <= x_high) || !std::isfinite(x_low) || !std::isfinite(x_high)) {
    throw DomainError("example config requires finite x_low <= x_high");
  }
  if (!(slope_noise_var >= 0.0) || !(additive_noise_var >= 0.0)) {
    throw DomainError("example noise variances must be nonnegative");
  }
}

Dataset sample_example_on(std::size_t count, const ExampleConfig& cfg, std::uint64_t stream_id,
                          std::uint64_t first) {
  cfg.validate();
  if (count < 1) throw DomainError("sample_example: count must be >= 1");
  const CounterRng rng(cfg.seed, stream_id);
  const double slope_sd = std::sqrt(cfg.slope_noise_var);
  const double additive_sd = std::sqrt(cfg.additive_noise_var);
  std::vector<double> xs(count);
  std::vector<double> ys(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t base = 3 * (first + i);
    const double x = cfg.x_low + (cfg.x_high - cfg.x_low) * rng.uniform(base);
    const double n1 = slope_sd * rng.normal(base + 1);
    const double n2 = additive_sd * rng.normal(base + 2);
    xs[i] = x;
    ys[i] = (10.0 + n1) * x + 10.0 * std::sin(4.0 * x) + 5.0 + n2;
  }
  return Dataset::scalar(std::move(xs), std::move(ys));
}

Dataset sample_example(std::size_t count, const ExampleConfig& cfg, SampleStream stream, std::uint64_t first) {
  return sample_example_on(count, cfg, static_cast<std::uint64_t>(stream), first);
}

double oracle_value(double x) noexcept { return 10.0 * x + 10.0 * std::sin(4.0 * x) + 5.0; }

PredictorHandle oracle_predictor() {
  return PredictorHandle([](std::span<const double> x) { return oracle_value(x[0]); });
}

double exact_sigma(double x, const ExampleConfig& cfg) {
  const double s = std::sqrt(cfg.slope_noise_var * x * x + cfg.additive_noise_var);
  if (!(s > 0.0)) throw DomainError("exact_sigma is zero for a noiseless configuration");
  return s;
}

SigmaHandle exact_sigma_handle(const ExampleConfig& cfg) {
  return SigmaHandle([cfg](std::span<const double> x) { return exact_sigma(x[0], cfg); });
}

double exact_bound(double x, double epsilon, const ExampleConfig& cfg) {
  return gaussian_quantile_bound(exact_sigma(x, cfg), epsilon);
}

void CoverageConfig::validate() const {
  if (repetitions < 1) throw DomainError("coverage: repetitions must be >= 1");
  if (validation_size < 1000) throw DomainError("coverage: validation_size must be >= 1000");
  example.validate();
}

CoverageReport run_coverage_experiment(const CoverageConfig& cfg, Execution exec) {
  cfg.validate();
  const SampleSpec spec = cfg.spec ? *cfg.spec : min_samples_lemma(cfg.levels, cfg.constant);
  const double eps = cfg.levels.epsilon();
  const double margin = 3.0 * std::sqrt(eps / static_cast<double>(cfg.validation_size));
  const auto predictor = oracle_predictor();
  const auto sigma = exact_sigma_handle(cfg.example);

  auto one_run = [&](std::size_t rep) {
    const Dataset calib = sample_example_on(spec.n_samples(), cfg.example,
                                            derive_stream(static_cast<std::uint64_t>(SampleStream::kCalibration), rep));
    const Dataset valid = sample_example_on(cfg.validation_size, cfg.example,
                                            derive_stream(static_cast<std::uint64_t>(SampleStream::kValidation), rep));
    CoverageRun run{};
    ViolationReport report{};
    if (cfg.mode == CoverageMode::kFixed) {
      const auto fixed = calibrate_fixed(predictor, calib, spec, cfg.levels, Execution::kSerial);
      run.bound = fixed.rho;
      report = evaluate_violation([rho = fixed.rho](std::span<const double>) { return rho; }, predictor, valid,
                                  Execution::kSerial);
    } else {
      const auto scaled = calibrate_conditioned(predictor, sigma, calib, spec, cfg.levels, Execution::kSerial);
      run.bound = scaled.gamma_bar;
      report = evaluate_violation(
          [&, g = scaled.gamma_bar](std::span<const double> x) { return g * sigma(x); }, predictor, valid,
          Execution::kSerial);
    }
    run.violation_ratio = report.ratio;
    run.failed = report.ratio > eps + margin;
    return run;
  };

  CoverageReport out{};
  out.runs = detail::indexed_map<CoverageRun>(cfg.repetitions, one_run, exec);
  out.n_samples = spec.n_samples();
  out.discard_rank = spec.discard_rank();
  out.margin = margin;
  out.failures = 0;
  for (const auto& run : out.runs) out.failures += run.failed ? 1 : 0;
  out.failure_fraction = static_cast<double>(out.failures) / static_cast<double>(cfg.repetitions);
  return out;
}

}  // namespace probscale
