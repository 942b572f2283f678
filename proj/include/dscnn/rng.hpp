#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dscnn/tensor.hpp"

namespace dscnn {

// Deterministic 64-bit generator used everywhere randomness is needed.
// The engine is mt19937_64 (fixed by the standard); real-valued draws are
// derived from raw 64-bit output so the stream is identical across
// implementations within one build.
class Rng {
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the spare deviate.
  double normal();

  // Uniform integer in [0, n), n >= 1, without modulo bias.
  int64_t below(int64_t n);

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      const int64_t j = below(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Tensor uniform_tensor(Rng& rng, Shape shape, double lo, double hi);
Tensor normal_tensor(Rng& rng, Shape shape, double mean = 0.0, double stddev = 1.0);

}  // namespace dscnn
