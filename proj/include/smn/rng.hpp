#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace smn {

// Deterministic RNG. mt19937_64 is seeded directly and all derived draws
// (bounded ints, canonical doubles, normals, shuffles) are implemented here
// instead of std::*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  // uniform in [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0,n); rejection sampling, no modulo bias
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t max = ~std::uint64_t{0};
    const std::uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t x = u64();
      if (rem == 0 || x <= max - rem) return x % n;
    }
  }

  // standard normal via Box-Muller (one value per call, two uniforms drawn)
  double normal() {
    double u1 = static_cast<double>((u64() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

// Mixes a stage tag into a global seed so pipeline stages can be re-run in
// isolation with reproducible sub-seeds (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stage + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Fixed stage tags for derive_seed.
namespace stage {
inline constexpr std::uint64_t kSynth = 0;
inline constexpr std::uint64_t kSubsample = 1;
inline constexpr std::uint64_t kKmeans = 2;
inline constexpr std::uint64_t kAssign = 3;   // random-assignment baseline
inline constexpr std::uint64_t kTrain = 4;    // + stream id
}  // namespace stage

}  // namespace smn
