#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace probscale {

/// Nonempty batch of finite scores. NaN and infinities are rejected on construction.
class ScoreCollection {
 public:
  explicit ScoreCollection(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// The r-th largest score (r = 1 is the maximum, r = N the minimum), counting
/// duplicates with multiplicity. Expected O(N) via partial selection.
/// Throws DomainError unless 1 ≤ r ≤ N.
double generalized_max(const ScoreCollection& scores, std::uint64_t r);

}  // namespace probscale
