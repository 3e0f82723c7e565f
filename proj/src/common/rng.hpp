#pragma once

#include <cstdint>

namespace gameharness {

// SplitMix64 stream. The whole state is one word so game states can carry
// and serialize it; distributions are implemented here rather than taken
// from <random> because those are not reproducible across standard libraries.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t state_ = 0;
};

// Deterministic seed derivation: mixes a parent seed with a stream label.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
  Rng r(parent ^ (label * 0xD1B54A32D192ED03ULL));
  return r.next();
}

}  // namespace gameharness
