#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace coxperc {

/// SplitMix64 finaliser; used to derive independent substream seeds.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Hash of an ordered key tuple, e.g. (master seed, replicate, edge index).
constexpr std::uint64_t StreamKey(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t p : parts) h = Mix64(h ^ Mix64(p));
  return h;
}

/// Uniform double in [0, 1) from 64 random bits.
constexpr double ToUnit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// xoshiro256** with splitmix64 seeding. Cheap to construct, so every edge,
/// source or replicate gets its own stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : state_) {
      z += 0x9E3779B97F4A7C15ULL;
      s = Mix64(z - 0x9E3779B97F4A7C15ULL);
    }
  }

  Rng(std::initializer_list<std::uint64_t> key) : Rng(StreamKey(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = Rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = Rotl(state_[3], 45);
    return result;
  }

  double Uniform() { return ToUnit((*this)()); }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

 private:
  static constexpr std::uint64_t Rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

/// Stream tags keep substreams of different purposes apart.
enum class Stream : std::uint64_t {
  kMeasure = 1,
  kPalm = 2,
  kCox = 3,
  kThinning = 4,
  kBonds = 5,
  kPoisson = 6,
  kCalibration = 7,
  kDiagnostic = 8,
};

constexpr std::uint64_t Tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace coxperc
