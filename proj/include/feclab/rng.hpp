#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace feclab {

// splitmix64 output function (Steele et al.). Used both as the per-stream
// generator and, applied to tag words, to derive independent substreams.
inline uint64_t splitmix64_mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic, splittable random stream. Gaussians come from Box-Muller so
// sequences are identical across platforms for a given seed; nothing here
// depends on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent stream addressed by (seed, tag0, tag1, ...). Streams for
  // different tag tuples are uncorrelated, which lets parallel workers own
  // their own reproducible noise sources.
  static Rng derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
    uint64_t s = splitmix64_mix(seed + 0x9E3779B97F4A7C15ull);
    for (uint64_t t : tags) s = splitmix64_mix(s ^ (t + 0x9E3779B97F4A7C15ull));
    return Rng(s);
  }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return splitmix64_mix(state_);
  }

  // Uniform in [0,1) with 53 random mantissa bits.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  int next_bit() { return int(next_u64() >> 63); }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] so log() is finite
    double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace feclab
