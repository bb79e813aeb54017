#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "mpo/errors.hpp"

namespace mpo {

// Seeded random source. All draws go through uniform() so that every
// sampling decision is reproducible bit-for-bit from the seed alone,
// independent of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw ValidationError("uniform_int requires n > 0");
    int i = static_cast<int>(uniform() * n);
    return i < n ? i : n - 1;
  }

  // Draw from a probability vector (assumed to sum to ~1). Inverse CDF scan;
  // the last positive entry absorbs rounding slack.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    int last_positive = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      if (probs[i] > 0.0) last_positive = i;
      cum += probs[i];
      if (u < cum) return i;
    }
    if (last_positive < 0) throw ValidationError("categorical: all-zero probability vector");
    return last_positive;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mpo
