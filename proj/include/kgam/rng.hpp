#pragma once

#include <cstdint>

namespace kgam {

// SplitMix64: 64-bit state, one add and a 3-round mix per draw.
//
// Chosen because the stream is trivially reproducible in any language:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// uniform()  = (next() >> 11) * 2^-53, in [0, 1)
// normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), one pair of uniforms per
//              deviate (the sine half is discarded so every deviate costs
//              exactly two draws)
// index(n)   = next() % n
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  std::uint64_t index(std::uint64_t n) noexcept { return next() % n; }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Independent stream for a (seed, purpose) pair, so that e.g. weight
// initialisation and epoch shuffling never share draws.
SplitMix64 derive_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

}  // namespace kgam
