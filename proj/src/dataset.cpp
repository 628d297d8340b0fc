#include "probscale/dataset.hpp"

#include <cmath>
#include <string>

#include "probscale/errors.hpp"

namespace probscale {

Dataset::Dataset(std::size_t dim, std::vector<double> xs, std::vector<double> ys)
    : dim_(dim), xs_(std::move(xs)), ys_(std::move(ys)) {
  if (dim_ == 0) throw DomainError("dataset dimension must be positive");
  if (ys_.empty()) throw DomainError("dataset must be nonempty");
  if (xs_.size() != ys_.size() * dim_) {
    throw DomainError("dataset has " + std::to_string(xs_.size()) + " x entries for " +
                      std::to_string(ys_.size()) + " rows of dimension " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < ys_.size(); ++i) {
    if (!std::isfinite(ys_[i])) throw DomainError("dataset row " + std::to_string(i) + ": y is not finite");
    for (std::size_t d = 0; d < dim_; ++d) {
      if (!std::isfinite(xs_[i * dim_ + d])) {
        throw DomainError("dataset row " + std::to_string(i) + ": x is not finite");
      }
    }
  }
}

Dataset Dataset::scalar(std::vector<double> xs, std::vector<double> ys) {
  return Dataset(1, std::move(xs), std::move(ys));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(rows.size() * dim_);
  ys.reserve(rows.size());
  for (std::size_t row : rows) {
    if (row >= size()) throw DomainError("dataset subset: row " + std::to_string(row) + " out of range");
    const auto xi = x(row);
    xs.insert(xs.end(), xi.begin(), xi.end());
    ys.push_back(ys_[row]);
  }
  return Dataset(dim_, std::move(xs), std::move(ys));
}

PredictorHandle::PredictorHandle(PredictorFn fn) : fn_(std::move(fn)) {
  if (!fn_) throw DomainError("predictor handle needs a callable");
}

SigmaHandle::SigmaHandle(SigmaFn fn) : fn_(std::move(fn)) {
  if (!fn_) throw DomainError("sigma handle needs a callable");
}

double SigmaHandle::operator()(std::span<const double> x) const {
  const double s = fn_(x);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw EvaluationError("sigma estimate must be finite and strictly positive, got " + std::to_string(s));
  }
  return s;
}

SigmaHandle SigmaHandle::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError("constant sigma must be finite and positive");
  }
  return SigmaHandle([value](std::span<const double>) { return value; });
}

PairValue ModelPair::evaluate(std::span<const double> x) const {
  if (joint) {
    PairValue v = joint(x);
    if (!(v.sigma > 0.0) || !std::isfinite(v.sigma)) {
      throw EvaluationError("sigma estimate must be finite and strictly positive, got " +
                            std::to_string(v.sigma));
    }
    return v;
  }
  return {predictor(x), sigma(x)};
}

}  // namespace probscale
