#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace crossview {

// Deterministic random source. std::mt19937_64 is a fixed algorithm, but the
// standard distributions are implementation-defined, so all draws here go
// through explicit, portable transforms. Identical seeds give identical
// streams on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, n), rejection sampled.
  uint64_t below(uint64_t n);

  // Standard normal via Box-Muller; caches the paired draw.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates with portable index draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream, e.g. one per noise-sweep level.
  Rng fork(uint64_t stream) const;

 private:
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace crossview
