#pragma once

#include <cmath>
#include <cstdint>

namespace dlva {

// xoshiro256** seeded through splitmix64. Self-contained so that streams are
// bit-stable across platforms and standard libraries. Every stochastic
// operation takes one of these by reference; child streams come from split().
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& limb : state_) limb = splitmix(x);
  }

  // Deterministically derives an independent stream for (this seed, id).
  Rng split(uint64_t id) const {
    uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL + id);
    x ^= state_[1] * 0xbf58476d1ce4e5b9ULL;
    return Rng(x ^ (state_[2] + (id << 1)));
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  float uniform_float() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }

  // uniform integer in [0, n)
  uint64_t range(uint64_t n) { return n == 0 ? 0 : next() % n; }

  // standard normal via Box-Muller (one value per call; no hidden state)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  static uint64_t splitmix(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
};

}  // namespace dlva
