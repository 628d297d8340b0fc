#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace probscale {

/// Observations (x_i, y_i) with x_i ∈ R^dim. Stored row-major.
class Dataset {
 public:
  /// Throws DomainError on empty input, ragged size, zero dim or non-finite entries.
  Dataset(std::size_t dim, std::vector<double> xs, std::vector<double> ys);

  /// Convenience for scalar inputs.
  static Dataset scalar(std::vector<double> xs, std::vector<double> ys);

  std::size_t size() const noexcept { return ys_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> x(std::size_t i) const noexcept {
    return {xs_.data() + i * dim_, dim_};
  }
  double y(std::size_t i) const noexcept { return ys_[i]; }

  std::span<const double> flat_x() const noexcept { return xs_; }
  std::span<const double> ys() const noexcept { return ys_; }

  /// Rows in the given order. Throws DomainError on out-of-range indices or an empty selection.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t dim_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

using PredictorFn = std::function<double(std::span<const double>)>;
using SigmaFn = std::function<double(std::span<const double>)>;

/// Deterministic map x -> T(x). Must be safe to call concurrently.
class PredictorHandle {
 public:
  explicit PredictorHandle(PredictorFn fn);
  double operator()(std::span<const double> x) const { return fn_(x); }

 private:
  PredictorFn fn_;
};

/// Map x -> σ̂(x) > 0. Evaluation throws EvaluationError on a non-positive or
/// non-finite value.
class SigmaHandle {
 public:
  explicit SigmaHandle(SigmaFn fn);
  double operator()(std::span<const double> x) const;

  static SigmaHandle constant(double value);

 private:
  SigmaFn fn_;
};

struct PairValue {
  double prediction;
  double sigma;
};

/// One family member (T_j, σ̂_j). `joint`, when set, evaluates both at once;
/// the kernel family uses it to share one local fit between T and σ̂.
struct ModelPair {
  PredictorHandle predictor;
  SigmaHandle sigma;
  std::function<PairValue(std::span<const double>)> joint{};

  PairValue evaluate(std::span<const double> x) const;
};

}  // namespace probscale
