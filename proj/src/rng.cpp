#include "kgam/rng.hpp"

#include <cmath>
#include <numbers>

namespace kgam {

std::uint64_t SplitMix64::next() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SplitMix64 derive_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  SplitMix64 mixer(seed ^ (stream_id * 0xD1B54A32D192ED03ULL));
  return SplitMix64(mixer.next());
}

}  // namespace kgam
