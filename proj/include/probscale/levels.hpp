#pragma once

#include <cstdint>
#include <string_view>

namespace probscale {

/// Accuracy ε and confidence δ of a probabilistic guarantee, both in (0,1).
class ProbabilityLevels {
 public:
  ProbabilityLevels(double epsilon, double delta);

  double epsilon() const noexcept { return epsilon_; }
  double delta() const noexcept { return delta_; }

 private:
  double epsilon_;
  double delta_;
};

/// How a SampleSpec was obtained.
enum class SpecRule : std::uint8_t {
  kExplicitConstant,  ///< N = ceil(c/ε · ln(1/δ)), r = floor(εN/2)
  kExplicitBound,     ///< smallest N with εN ≥ r−1 + ln(1/δ) + sqrt(2(r−1)ln(1/δ))
  kExactBinomial,     ///< smallest N with B(r−1; N, ε) ≤ δ
  kFamily,            ///< explicit-constant rule with δ replaced by δ/n_F
  kUser,              ///< supplied directly by the caller
};

std::string_view to_string(SpecRule rule) noexcept;

/// Number of calibration samples N and discard rank r, 1 ≤ r ≤ N.
class SampleSpec {
 public:
  SampleSpec(std::uint64_t n_samples, std::uint64_t discard_rank, SpecRule rule = SpecRule::kUser);

  std::uint64_t n_samples() const noexcept { return n_; }
  std::uint64_t discard_rank() const noexcept { return r_; }
  SpecRule rule() const noexcept { return rule_; }

  friend bool operator==(const SampleSpec& a, const SampleSpec& b) noexcept {
    return a.n_ == b.n_ && a.r_ == b.r_ && a.rule_ == b.rule_;
  }

 private:
  std::uint64_t n_;
  std::uint64_t r_;
  SpecRule rule_;
};

}  // namespace probscale
