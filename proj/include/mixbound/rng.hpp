#pragma once

#include <array>
#include <cstdint>

namespace mixbound {

// All randomized routines in this library draw from the generators below
// rather than <random> distributions, whose output is implementation-defined.
// This pins results bit-exactly across platforms and standard libraries.

// SplitMix64 (Steele, Lea, Flood): used to expand a 64-bit seed into
// generator state.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256** (Blackman & Vigna), seeded through SplitMix64.
struct Xoshiro256StarStar {
  std::array<std::uint64_t, 4> s{};

  explicit Xoshiro256StarStar(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& word : s) word = sm.next();
    if (s[0] == 0 && s[1] == 0 && s[2] == 0 && s[3] == 0) s[0] = 1;
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Stream for one Monte Carlo trial.  Deriving the stream from seed XOR trial
// index makes trials independent of execution order and worker count.
inline Xoshiro256StarStar trial_stream(std::uint64_t seed, std::uint64_t trial) {
  return Xoshiro256StarStar(seed ^ trial);
}

}  // namespace mixbound
