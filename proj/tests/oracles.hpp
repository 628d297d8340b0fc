#pragma once

// Test-only reference computations, deliberately independent of the library
// code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace probscale::oracle {

using Rational = boost::multiprecision::cpp_rational;

/// The double `p` as an exact rational.
inline Rational exact_rational(double p) {
  int exponent = 0;
  const double mantissa = std::frexp(p, &exponent);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  Rational r(scaled);
  const int shift = exponent - 53;
  boost::multiprecision::cpp_int pow2 = 1;
  pow2 <<= std::abs(shift);
  if (shift >= 0) {
    r *= Rational(pow2);
  } else {
    r /= Rational(pow2);
  }
  return r;
}

/// Σ_{i≤k} C(n,i) p^i (1−p)^{n−i} in exact rational arithmetic.
inline double binomial_tail_exact(std::uint64_t k, std::uint64_t n, double p_double) {
  using boost::multiprecision::cpp_int;
  const Rational p = exact_rational(p_double);
  const Rational q = Rational(1) - p;
  Rational sum = 0;
  cpp_int choose = 1;
  for (std::uint64_t i = 0; i <= k; ++i) {
    if (i > 0) choose = choose * (n - i + 1) / i;
    Rational term = Rational(choose);
    for (std::uint64_t a = 0; a < i; ++a) term *= p;
    for (std::uint64_t a = 0; a < n - i; ++a) term *= q;
    sum += term;
  }
  return static_cast<double>(sum);
}

/// Element r−1 of the descending full sort.
inline double rank_by_sort(std::vector<double> values, std::uint64_t r) {
  std::sort(values.begin(), values.end(), std::greater<>());
  return values[r - 1];
}

/// Two-sided standard normal quantile via Boost's complement quantile.
inline double two_sided_quantile(double epsilon) {
  boost::math::normal_distribution<double> z;
  return boost::math::quantile(boost::math::complement(z, epsilon / 2.0));
}

}  // namespace probscale::oracle
