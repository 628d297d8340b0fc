#pragma once

#include <cstdint>

namespace probscale {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw `i` of stream `s` under seed `k` is
///   mix64(mix64(k ^ mix64(s + φ)) + (i + 1)·φ),   φ = 0x9e3779b97f4a7c15.
/// Draws are addressable by index, so disjoint index ranges or distinct
/// streams never share a value source and parallel consumers need no state.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t bits(std::uint64_t index) const noexcept;

  /// Uniform on the open interval (0,1) with 53-bit resolution.
  double uniform(std::uint64_t index) const noexcept;

  /// Standard normal by inverse CDF of uniform(index).
  double normal(std::uint64_t index) const;

  std::uint64_t stream_key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Stream id for a named purpose and repetition, e.g. derive_stream(kCalibration, rep).
std::uint64_t derive_stream(std::uint64_t purpose, std::uint64_t repetition) noexcept;

}  // namespace probscale
