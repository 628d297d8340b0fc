#pragma once

// Probabilistic-scaling calibration of a given predictor.
//
// Every routine takes N i.i.d. observations that were not used to build the
// predictor (caller contract; the library cannot check provenance), scores
// them, and returns the r-th largest score. Under B(r−1; N, ε) ≤ δ the result
// bounds the absolute error of a fresh observation except with probability ε,
// and that statement holds with confidence 1−δ over the calibration draw.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "probscale/dataset.hpp"
#include "probscale/kernels.hpp"
#include "probscale/levels.hpp"

namespace probscale {

struct FixedBound {
  double rho;
  SampleSpec spec;
  ProbabilityLevels levels;
};

struct ScaledBound {
  double gamma_bar;
  SampleSpec spec;
  ProbabilityLevels levels;
};

struct FamilyCalibration {
  std::vector<double> gamma_bars;
  std::size_t selected_index;
  /// Σ_i γ̄_j σ̂_j(x_i) for each member j.
  std::vector<double> criterion_values;
  SampleSpec spec;
  ProbabilityLevels levels;

  double selected_gamma_bar() const { return gamma_bars.at(selected_index); }
};

struct ViolationReport {
  std::size_t total;
  std::size_t violations;
  double ratio;
  /// Mean of bound(x) over the data, i.e. the mean interval half-width.
  double mean_bound_width;
};

/// r-th largest of already-computed scores, after checking the spec against
/// the levels and the score count against N.
double calibrate_scores(std::span<const double> scores, const SampleSpec& spec,
                        const ProbabilityLevels& levels, std::uint64_t n_family = 1);

/// ρ = r-th largest of |y_i − T(x_i)|.
/// Throws ContractError if data.size() != N or the spec does not validate.
FixedBound calibrate_fixed(const PredictorHandle& predictor, const Dataset& data, const SampleSpec& spec,
                           const ProbabilityLevels& levels, Execution exec = Execution::kParallel);

/// γ̄ = r-th largest of |y_i − T(x_i)| / σ̂(x_i); the per-query bound is γ̄·σ̂(x).
/// A non-positive σ̂(x_i) raises EvaluationError naming i.
ScaledBound calibrate_conditioned(const PredictorHandle& predictor, const SigmaHandle& sigma,
                                  const Dataset& data, const SampleSpec& spec,
                                  const ProbabilityLevels& levels, Execution exec = Execution::kParallel);

struct FamilyOptions {
  /// Inputs on which Σ_i γ̄_j σ̂_j(x_i) is evaluated. Defaults to the calibration inputs.
  const Dataset* selection_data = nullptr;
  Execution exec = Execution::kParallel;
};

/// Calibrates every member on the same multi-sample. The spec must satisfy
/// B(r−1; N, ε) ≤ δ/n_F, otherwise ContractError. The selected member
/// minimizes the criterion; ties go to the smallest index.
FamilyCalibration calibrate_family(std::span<const ModelPair> family, const Dataset& data,
                                   const ProbabilityLevels& levels, const SampleSpec& spec,
                                   const FamilyOptions& options = {});

/// σ/sqrt(ε): Markov-inequality bound, valid for any error distribution.
double markov_bound(double sigma_value, double epsilon);

/// γ_ε with P{|Z| > γ_ε} = ε for standard normal Z, by bisection on erfc.
double two_sided_normal_quantile(double epsilon);

/// γ_ε·σ: sharp bound when the error is Gaussian with standard deviation σ.
double gaussian_quantile_bound(double sigma_value, double epsilon);

/// Counts |y − T(x)| > bound(x) (ties are not violations).
ViolationReport evaluate_violation(const BoundFn& bound, const PredictorHandle& predictor,
                                   const Dataset& data, Execution exec = Execution::kParallel);

}  // namespace probscale
