#include "probscale/sample_complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "probscale/errors.hpp"

namespace probscale {

ProbabilityLevels::ProbabilityLevels(double epsilon, double delta) : epsilon_(epsilon), delta_(delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("epsilon must lie in the open interval (0,1), got " + std::to_string(epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("delta must lie in the open interval (0,1), got " + std::to_string(delta));
  }
}

std::string_view to_string(SpecRule rule) noexcept {
  switch (rule) {
    case SpecRule::kExplicitConstant: return "explicit-constant";
    case SpecRule::kExplicitBound: return "explicit-bound";
    case SpecRule::kExactBinomial: return "exact-binomial";
    case SpecRule::kFamily: return "family";
    case SpecRule::kUser: return "user";
  }
  return "unknown";
}

SampleSpec::SampleSpec(std::uint64_t n_samples, std::uint64_t discard_rank, SpecRule rule)
    : n_(n_samples), r_(discard_rank), rule_(rule) {
  if (r_ < 1 || r_ > n_) {
    throw DomainError("sample spec requires 1 <= r <= N, got N=" + std::to_string(n_) +
                      " r=" + std::to_string(r_));
  }
}

namespace {

void check_binomial_args(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) {
    throw DomainError("binomial_tail: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("binomial_tail: p must lie in [0,1], got " + std::to_string(p));
  }
}

double log_choose(std::uint64_t n, std::uint64_t i) {
  const auto nd = static_cast<double>(n);
  const auto id = static_cast<double>(i);
  return std::lgamma(nd + 1.0) - std::lgamma(id + 1.0) - std::lgamma(nd - id + 1.0);
}

double ln_inverse(double delta) { return -std::log(delta); }

}  // namespace

namespace {

// log Σ_{i=lo}^{hi} C(n,i) p^i (1−p)^{n−i}, max-shifted.
double log_term_sum(std::uint64_t lo, std::uint64_t hi, std::uint64_t n, double log_p, double log_q) {
  const auto nd = static_cast<double>(n);
  std::vector<double> terms(hi - lo + 1);
  for (std::uint64_t i = lo; i <= hi; ++i) {
    const auto id = static_cast<double>(i);
    terms[i - lo] = log_choose(n, i) + id * log_p + (nd - id) * log_q;
  }
  const double peak = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

}  // namespace

double log_binomial_tail(std::uint64_t k, std::uint64_t n, double p) {
  check_binomial_args(k, n, p);
  if (k == n || p == 0.0) return 0.0;
  if (p == 1.0) return -std::numeric_limits<double>::infinity();

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  if (k == 0) return static_cast<double>(n) * log_q;

  // Past the mean the lower sum is close to 1; its complement is the small,
  // accurately computable quantity.
  if (static_cast<double>(k) >= p * static_cast<double>(n)) {
    return std::log1p(-std::exp(log_term_sum(k + 1, n, n, log_p, log_q)));
  }
  return std::min(0.0, log_term_sum(0, k, n, log_p, log_q));
}

double binomial_tail(std::uint64_t k, std::uint64_t n, double p) {
  check_binomial_args(k, n, p);
  if (k == n) return 1.0;
  // (1−p)^n directly: keeps exact boundary cases such as 0.5^2 = 0.25 exact.
  if (k == 0) return std::pow(1.0 - p, static_cast<double>(n));
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  if (static_cast<double>(k) >= p * static_cast<double>(n)) {
    return -std::expm1(log_term_sum(k + 1, n, n, std::log(p), std::log1p(-p)));
  }
  return std::exp(log_binomial_tail(k, n, p));
}

std::uint64_t min_samples_max(const ProbabilityLevels& levels) {
  return static_cast<std::uint64_t>(std::ceil(ln_inverse(levels.delta()) / levels.epsilon()));
}

std::uint64_t min_samples_explicit(const ProbabilityLevels& levels, std::uint64_t r) {
  if (r < 1) throw DomainError("min_samples_explicit: r must be >= 1");
  const double eps = levels.epsilon();
  const double log_inv = ln_inverse(levels.delta());
  const auto rm1 = static_cast<double>(r - 1);
  const double rhs = rm1 + log_inv + std::sqrt(2.0 * rm1 * log_inv);

  auto n = static_cast<std::uint64_t>(std::ceil(rhs / eps));
  // Correct the division rounding against the inequality as written.
  while (eps * static_cast<double>(n) < rhs) ++n;
  while (n > 1 && eps * static_cast<double>(n - 1) >= rhs) --n;
  return std::max(n, r);
}

namespace {

SampleSpec lemma_spec(double epsilon, double log_inv_delta, double constant, SpecRule rule) {
  if (!(constant >= kExactLemmaConstant * (1.0 - 1e-12))) {
    throw DomainError("lemma constant " + std::to_string(constant) +
                      " is below (1+sqrt(3))^2; the binomial guarantee would not hold");
  }
  const auto n = static_cast<std::uint64_t>(std::ceil(constant / epsilon * log_inv_delta));
  const auto r = static_cast<std::uint64_t>(std::floor(epsilon * static_cast<double>(n) / 2.0));
  if (r == 0) {
    throw InfeasibleSpecError("floor(eps*N/2) is 0 for N=" + std::to_string(n) +
                              "; choose the discard rank r explicitly");
  }
  return SampleSpec(n, r, rule);
}

}  // namespace

SampleSpec min_samples_lemma(const ProbabilityLevels& levels, double constant) {
  return lemma_spec(levels.epsilon(), ln_inverse(levels.delta()), constant, SpecRule::kExplicitConstant);
}

std::uint64_t min_samples_exact(const ProbabilityLevels& levels, std::uint64_t r) {
  if (r < 1) throw DomainError("min_samples_exact: r must be >= 1");
  const double eps = levels.epsilon();
  const double delta = levels.delta();
  auto ok = [&](std::uint64_t n) { return binomial_tail(r - 1, n, eps) <= delta; };

  // B(r−1; N, ε) is nonincreasing in N; the explicit bound is a valid bracket.
  std::uint64_t hi = min_samples_explicit(levels, r);
  while (!ok(hi)) hi *= 2;  // only reachable through rounding in the tail evaluator
  std::uint64_t lo = r;
  if (ok(lo)) return lo;
  // Invariant: !ok(lo), ok(hi).
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

SampleSpec min_samples_family(const ProbabilityLevels& levels, std::uint64_t n_family, double constant) {
  if (n_family < 1) throw DomainError("min_samples_family: family size must be >= 1");
  if (n_family == 1) return min_samples_lemma(levels, constant);
  const double log_inv = ln_inverse(levels.delta()) + std::log(static_cast<double>(n_family));
  return lemma_spec(levels.epsilon(), log_inv, constant, SpecRule::kFamily);
}

bool validate_spec(const SampleSpec& spec, const ProbabilityLevels& levels, std::uint64_t n_family) {
  if (n_family < 1) throw DomainError("validate_spec: family size must be >= 1");
  const double threshold = levels.delta() / static_cast<double>(n_family);
  return binomial_tail(spec.discard_rank() - 1, spec.n_samples(), levels.epsilon()) <= threshold;
}

}  // namespace probscale
