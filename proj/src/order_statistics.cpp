#include "probscale/order_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "probscale/errors.hpp"

namespace probscale {

ScoreCollection::ScoreCollection(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("score collection must be nonempty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DomainError("score " + std::to_string(i) + " is not finite");
    }
  }
}

double generalized_max(const ScoreCollection& scores, std::uint64_t r) {
  const auto n = scores.size();
  if (r < 1 || r > n) {
    throw DomainError("generalized_max: rank " + std::to_string(r) + " outside [1, " +
                      std::to_string(n) + "]");
  }
  std::vector<double> work(scores.values().begin(), scores.values().end());
  const auto nth = work.begin() + static_cast<std::ptrdiff_t>(r - 1);
  std::nth_element(work.begin(), nth, work.end(), std::greater<>());
  return *nth;
}

}  // namespace probscale
