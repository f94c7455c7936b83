#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace egomo {

// mt19937_64 is fully specified by the standard; the distributions are not.
// All draws go through the explicit mappings below so that streams are
// bit-reproducible for a given seed, which the dataset digests rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_index(std::uint64_t n) {
    // Modulo bias is < 2^-40 for any n this project uses.
    return gen_() % n;
  }

  // Box-Muller; one pair per call keeps the stream layout obvious.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

// Deterministic seed derivation (splitmix64 finalizer). Used to give every
// record / parameter block / sample chain its own stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace egomo
