#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace treesv {

// Deterministic random source. mt19937_64 is bit-specified by the standard,
// and the distribution sampling below is hand-rolled (std:: distributions are
// implementation-defined), so a seeded run reproduces identical streams on
// any platform this builds on. Substreams are derived with splitmix64 so that
// per-tree / per-dataset streams are independent of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent substream for (seed, stream_index).
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    s = mix(s);
    s = mix(s);
    return Rng(s);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// k distinct indices sampled without replacement from [0, n), returned in
// ascending order (partial Fisher-Yates, then sort).
std::vector<int> sample_without_replacement(Rng& rng, int n, int k);

}  // namespace treesv
