#include "probscale/rng.hpp"

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace probscale {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t CounterRng::bits(std::uint64_t index) const noexcept {
  return mix64(key_ + (index + 1) * kGolden);
}

double CounterRng::uniform(std::uint64_t index) const noexcept {
  return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const {
  // Φ⁻¹(u) = −sqrt(2)·erfc⁻¹(2u); u ∈ (0,1) keeps the argument in (0,2).
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform(index));
}

std::uint64_t derive_stream(std::uint64_t purpose, std::uint64_t repetition) noexcept {
  return mix64((purpose * kGolden) ^ mix64(repetition));
}

}  // namespace probscale
