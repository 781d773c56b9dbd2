#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace lcasc {

/* Deterministic random source used wherever the toolkit draws randomness.
 * Wraps mt19937_64 but hand-rolls every distribution, so a seed produces
 * the same stream on any platform; the standard distribution objects are
 * implementation defined and would break run reproducibility. */
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /* Uniform double in [0, 1). */
  double uniform();

  /* Uniform double in [lo, hi). */
  double uniform(double lo, double hi);

  /* Uniform integer in [0, n). n must be >= 1. */
  size_t uniform_index(size_t n);

  /* Standard normal via Box-Muller. */
  double normal();

  /* Gamma(shape, 1) via Marsaglia-Tsang squeeze. shape must be > 0. */
  double gamma(double shape);

  /* Beta(a, b) from two gamma draws. */
  double beta(double a, double b);

  /* Fisher-Yates shuffle driven by uniform_index. */
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace lcasc
