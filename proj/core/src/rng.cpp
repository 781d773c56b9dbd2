#include "lcasc/rng.hpp"

#include <cmath>

#include "lcasc/errors.hpp"

namespace lcasc {

double Rng::uniform() {
  /* 53 random bits scaled into [0, 1), the usual double-from-u64 recipe. */
  return double(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

size_t Rng::uniform_index(size_t n) {
  if (n == 0) throw UsageError("uniform_index: n must be >= 1");
  /* Rejection sampling to kill modulo bias. */
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = eng_();
  } while (x >= limit);
  return size_t(x % n);
}

double Rng::normal() {
  /* Box-Muller, one value per pair; the second is discarded to keep the
   * stream position a pure function of the number of calls. */
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw UsageError("gamma: shape must be > 0");
  if (shape < 1.0) {
    /* Boost trick: Gamma(a) = Gamma(a + 1) * U^(1/a). */
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

}  // namespace lcasc
