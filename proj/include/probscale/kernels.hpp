#pragma once

// Data-parallel evaluation kernels. Every kernel has a serial reference path
// and an OpenMP path; both write results by index, so their outputs are
// identical element for element regardless of thread count or schedule.

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <vector>

#include "probscale/dataset.hpp"

namespace probscale {

enum class Execution { kSerial, kParallel };

using BoundFn = std::function<double(std::span<const double>)>;

namespace detail {

/// out[i] = fn(i) for i in [0, n). The first exception thrown by any
/// iteration (lowest index wins) is rethrown after the loop.
template <class T, class Fn>
std::vector<T> indexed_map(std::size_t n, Fn&& fn, Execution exec) {
  std::vector<T> out(n);
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex guard;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (static_cast<std::size_t>(i) < error_index) {
        error_index = static_cast<std::size_t>(i);
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace detail

/// T(x_i) for every row.
std::vector<double> evaluate_predictions(const PredictorHandle& predictor, const Dataset& data,
                                         Execution exec = Execution::kParallel);

/// (T(x_i), σ̂(x_i)) for every row. A non-positive σ̂ raises EvaluationError
/// naming the first offending row.
std::vector<PairValue> evaluate_pairs(const ModelPair& pair, const Dataset& data,
                                      Execution exec = Execution::kParallel);

/// bound(x_i) for every row.
std::vector<double> evaluate_bounds(const BoundFn& bound, const Dataset& data,
                                    Execution exec = Execution::kParallel);

/// Number of i with |y_i − prediction_i| > bound_i (strict).
std::size_t count_exceedances(std::span<const double> ys, std::span<const double> predictions,
                              std::span<const double> bounds, Execution exec = Execution::kParallel);

}  // namespace probscale
