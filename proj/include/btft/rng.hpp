#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace btft {

// SplitMix64 finalizer; used both for seeding and for deriving substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive hash of a base seed and a list of indices. Sweeps use
// derive_seed(base, point, replicate) so that results depend only on the
// point's position in the grid, never on the execution schedule.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = base;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t k : keys) {
    state = h ^ (k + 0x632be59bd9b4e019ULL);
    h = splitmix64(state);
  }
  return h;
}

// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform integer in [0, n) from exactly one draw (multiply-shift, no
  // rejection). The bias is at most n / 2^64.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits, one draw.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool operator==(const Rng&) const = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4]{};
};

}  // namespace btft
