#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace lcasc {

/* Dense rank-4 value grid in double precision, laid out row-major with the
 * channel index fastest: index(n,h,w,c) = ((n*H + h)*W + w)*C + c.
 * Network activations use n = batch; spectrograms use n = 1 with
 * h = frequency, w = time frame, c = feature channel. */
struct Tensor {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_),
        v(size_t(n_) * size_t(h_) * size_t(w_) * size_t(c_), 0.0) {}

  static Tensor spectrogram(int freq, int frames, int channels) {
    return Tensor(1, freq, frames, channels);
  }

  size_t size() const { return v.size(); }

  size_t index(int ni, int hi, int wi, int ci) const {
    return ((size_t(ni) * h + hi) * w + wi) * c + ci;
  }

  double& at(int ni, int hi, int wi, int ci) { return v[index(ni, hi, wi, ci)]; }
  double at(int ni, int hi, int wi, int ci) const { return v[index(ni, hi, wi, ci)]; }

  /* Spectrogram accessors (batch index 0). */
  double& sp(int freq, int frame, int chan) { return at(0, freq, frame, chan); }
  double sp(int freq, int frame, int chan) const { return at(0, freq, frame, chan); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }

  bool finite() const {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }
};

}  // namespace lcasc
