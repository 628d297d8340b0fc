#include "probscale/kernels.hpp"

#include <cmath>
#include <string>

#include "probscale/errors.hpp"

namespace probscale {

std::vector<double> evaluate_predictions(const PredictorHandle& predictor, const Dataset& data,
                                         Execution exec) {
  return detail::indexed_map<double>(
      data.size(), [&](std::size_t i) { return predictor(data.x(i)); }, exec);
}

std::vector<PairValue> evaluate_pairs(const ModelPair& pair, const Dataset& data, Execution exec) {
  return detail::indexed_map<PairValue>(
      data.size(),
      [&](std::size_t i) {
        try {
          return pair.evaluate(data.x(i));
        } catch (const EvaluationError& e) {
          throw EvaluationError("observation " + std::to_string(i) + ": " + e.what());
        }
      },
      exec);
}

std::vector<double> evaluate_bounds(const BoundFn& bound, const Dataset& data, Execution exec) {
  return detail::indexed_map<double>(data.size(), [&](std::size_t i) { return bound(data.x(i)); }, exec);
}

std::size_t count_exceedances(std::span<const double> ys, std::span<const double> predictions,
                              std::span<const double> bounds, Execution exec) {
  if (ys.size() != predictions.size() || ys.size() != bounds.size()) {
    throw DomainError("count_exceedances: length mismatch");
  }
  const auto n = static_cast<std::ptrdiff_t>(ys.size());
  std::size_t count = 0;
  if (exec == Execution::kSerial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      if (std::abs(ys[i] - predictions[i]) > bounds[i]) ++count;
    }
    return count;
  }
#pragma omp parallel for reduction(+ : count)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (std::abs(ys[i] - predictions[i]) > bounds[i]) ++count;
  }
  return count;
}

}  // namespace probscale
