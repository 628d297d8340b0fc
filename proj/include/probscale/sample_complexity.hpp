#pragma once

// Sample sizes N and discard ranks r for which the r-th largest of N i.i.d.
// scores is an ε-accurate upper bound with confidence 1−δ, i.e. for which
// B(r−1; N, ε) ≤ δ.

#include <cstdint>

#include "probscale/levels.hpp"

namespace probscale {

/// (1 + sqrt 3)^2 ≈ 7.4641, the smallest constant for which the
/// r = floor(εN/2) rule is proven to satisfy the binomial condition.
inline constexpr double kExactLemmaConstant = 7.4641016151377545870548926830117;

/// Rounded constant printed alongside the r = floor(εN/2) rule.
inline constexpr double kDefaultLemmaConstant = 7.47;

/// Binomial cumulative distribution B(k; n, p) = Σ_{i≤k} C(n,i) p^i (1−p)^{n−i}.
///
/// Terms are formed in log space from lgamma coefficients and combined with a
/// max-shifted log-sum-exp, so deep tails (1e-6 and below at n ~ 1e4) keep
/// their relative accuracy. Throws DomainError unless k ≤ n and p ∈ [0,1].
double binomial_tail(std::uint64_t k, std::uint64_t n, double p);

/// Natural log of binomial_tail; finite for tails far below DBL_MIN.
double log_binomial_tail(std::uint64_t k, std::uint64_t n, double p);

/// ceil(ln(1/δ)/ε): samples needed when the plain maximum (r = 1) is used.
std::uint64_t min_samples_max(const ProbabilityLevels& levels);

/// Smallest N with εN ≥ r−1 + ln(1/δ) + sqrt(2(r−1)·ln(1/δ)).
std::uint64_t min_samples_explicit(const ProbabilityLevels& levels, std::uint64_t r);

/// N = ceil(constant/ε · ln(1/δ)) and r = floor(εN/2).
///
/// `constant` must be at least kExactLemmaConstant. Throws InfeasibleSpecError
/// when the resulting r is zero; pick r explicitly and use min_samples_exact.
SampleSpec min_samples_lemma(const ProbabilityLevels& levels,
                             double constant = kDefaultLemmaConstant);

/// Smallest N ≥ r with B(r−1; N, ε) ≤ δ.
std::uint64_t min_samples_exact(const ProbabilityLevels& levels, std::uint64_t r);

/// min_samples_lemma with δ replaced by δ/n_family (union bound over a family).
SampleSpec min_samples_family(const ProbabilityLevels& levels, std::uint64_t n_family,
                              double constant = kDefaultLemmaConstant);

/// True iff B(r−1; N, ε) ≤ δ/n_family.
bool validate_spec(const SampleSpec& spec, const ProbabilityLevels& levels,
                   std::uint64_t n_family = 1);

}  // namespace probscale
