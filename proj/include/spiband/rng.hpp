#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spiband::rng {

// SplitMix64 output function. derive_stream_seed(seed, k) is the (k+1)-th
// output of a SplitMix64 generator started at `seed`, which gives every
// stream index an independent, well-mixed 64-bit seed. Both the mixing and
// std::mt19937_64 are fully specified by their definitions, so sequences are
// identical on every platform.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seeded random stream with portable real/integer draws. The standard only
// pins down the raw engine output, not the distribution adaptors, so the
// uniform/normal/bounded-int transforms are implemented here explicitly.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  static Stream substream(std::uint64_t seed, std::uint64_t index) {
    return Stream(derive_stream_seed(seed, index));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double next_unit_open() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  // Unbiased uniform integer in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t x = gen_();
      if (x >= threshold) return x % bound;
    }
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace spiband::rng
