#include <cmath>

#include "probscale/calibration.hpp"
#include "probscale/errors.hpp"

namespace probscale {

double two_sided_normal_quantile(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("two_sided_normal_quantile: epsilon must lie in (0,1)");
  }
  // P{|Z| > g} = erfc(g/sqrt 2) is strictly decreasing in g.
  auto tail = [](double g) { return std::erfc(g / std::sqrt(2.0)); };
  double lo = 0.0;
  double hi = 1.0;
  while (tail(hi) > epsilon) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) > epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace probscale
