#include "probscale/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "probscale/errors.hpp"
#include "probscale/order_statistics.hpp"
#include "probscale/sample_complexity.hpp"

namespace probscale {

namespace {

void check_contract(std::size_t data_size, const SampleSpec& spec, const ProbabilityLevels& levels,
                    std::uint64_t n_family) {
  if (data_size != spec.n_samples()) {
    throw ContractError("calibration needs exactly N=" + std::to_string(spec.n_samples()) +
                        " observations, got " + std::to_string(data_size));
  }
  if (!validate_spec(spec, levels, n_family)) {
    throw ContractError("spec N=" + std::to_string(spec.n_samples()) + " r=" +
                        std::to_string(spec.discard_rank()) + " violates B(r-1;N,eps) <= delta/" +
                        std::to_string(n_family));
  }
}

}  // namespace

double calibrate_scores(std::span<const double> scores, const SampleSpec& spec,
                        const ProbabilityLevels& levels, std::uint64_t n_family) {
  check_contract(scores.size(), spec, levels, n_family);
  return generalized_max(ScoreCollection({scores.begin(), scores.end()}), spec.discard_rank());
}

FixedBound calibrate_fixed(const PredictorHandle& predictor, const Dataset& data, const SampleSpec& spec,
                           const ProbabilityLevels& levels, Execution exec) {
  check_contract(data.size(), spec, levels, 1);
  const auto predictions = evaluate_predictions(predictor, data, exec);
  std::vector<double> scores(data.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = std::abs(data.y(i) - predictions[i]);
  return {generalized_max(ScoreCollection(std::move(scores)), spec.discard_rank()), spec, levels};
}

ScaledBound calibrate_conditioned(const PredictorHandle& predictor, const SigmaHandle& sigma,
                                  const Dataset& data, const SampleSpec& spec,
                                  const ProbabilityLevels& levels, Execution exec) {
  check_contract(data.size(), spec, levels, 1);
  const ModelPair pair{predictor, sigma};
  const auto values = evaluate_pairs(pair, data, exec);
  std::vector<double> scores(data.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = std::abs(data.y(i) - values[i].prediction) / values[i].sigma;
  }
  return {generalized_max(ScoreCollection(std::move(scores)), spec.discard_rank()), spec, levels};
}

FamilyCalibration calibrate_family(std::span<const ModelPair> family, const Dataset& data,
                                   const ProbabilityLevels& levels, const SampleSpec& spec,
                                   const FamilyOptions& options) {
  if (family.empty()) throw DomainError("calibrate_family: family must be nonempty");
  check_contract(data.size(), spec, levels, family.size());

  std::vector<double> gamma_bars(family.size());
  std::vector<double> criteria(family.size());
  for (std::size_t j = 0; j < family.size(); ++j) {
    const auto values = evaluate_pairs(family[j], data, options.exec);
    std::vector<double> scores(data.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = std::abs(data.y(i) - values[i].prediction) / values[i].sigma;
    }
    gamma_bars[j] = generalized_max(ScoreCollection(std::move(scores)), spec.discard_rank());

    double sigma_sum = 0.0;
    if (options.selection_data == nullptr) {
      for (const auto& v : values) sigma_sum += v.sigma;
    } else {
      const auto sel = evaluate_pairs(family[j], *options.selection_data, options.exec);
      for (const auto& v : sel) sigma_sum += v.sigma;
    }
    criteria[j] = gamma_bars[j] * sigma_sum;
  }

  const auto best = std::min_element(criteria.begin(), criteria.end());
  const auto selected = static_cast<std::size_t>(std::distance(criteria.begin(), best));
  return {std::move(gamma_bars), selected, std::move(criteria), spec, levels};
}

double markov_bound(double sigma_value, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("markov_bound: epsilon must lie in (0,1)");
  if (!(sigma_value >= 0.0)) throw DomainError("markov_bound: sigma must be nonnegative");
  return sigma_value / std::sqrt(epsilon);
}

double gaussian_quantile_bound(double sigma_value, double epsilon) {
  if (!(sigma_value >= 0.0)) throw DomainError("gaussian_quantile_bound: sigma must be nonnegative");
  return two_sided_normal_quantile(epsilon) * sigma_value;
}

ViolationReport evaluate_violation(const BoundFn& bound, const PredictorHandle& predictor,
                                   const Dataset& data, Execution exec) {
  const auto predictions = evaluate_predictions(predictor, data, exec);
  const auto bounds = evaluate_bounds(bound, data, exec);
  const std::size_t violations = count_exceedances(data.ys(), predictions, bounds, exec);
  double width = 0.0;
  for (double b : bounds) width += b;
  const auto total = data.size();
  return {total, violations, static_cast<double>(violations) / static_cast<double>(total),
          width / static_cast<double>(total)};
}

}  // namespace probscale
