#include "lcasc/nn.hpp"

#include <algorithm>
#include <cmath>

#include "lcasc/errors.hpp"

namespace lcasc {

Param::Param(std::string name_, std::vector<int> dims_, bool trainable_)
    : name(std::move(name_)), dims(std::move(dims_)), trainable(trainable_) {
  size_t count = 1;
  for (int d : dims) count *= size_t(d);
  v.assign(count, 0.0);
  g.assign(count, 0.0);
}

const char* layer_kind_name(LayerSpec::Kind kind) {
  switch (kind) {
    case LayerSpec::Kind::Conv3x3: return "conv3x3";
    case LayerSpec::Kind::DecomposedConv: return "decomposed_conv";
    case LayerSpec::Kind::BatchNorm: return "batchnorm";
    case LayerSpec::Kind::ReLU: return "relu";
    case LayerSpec::Kind::AvgPool2x2: return "avgpool2x2";
    case LayerSpec::Kind::GlobalAvgPool: return "global_avgpool";
    case LayerSpec::Kind::Dropout: return "dropout";
    case LayerSpec::Kind::Dense: return "dense";
    case LayerSpec::Kind::Softmax: return "softmax";
  }
  return "?";
}

size_t DecomposedConvSpec::weight_count() const {
  size_t total = 0;
  for (const Sub& s : subs) total += s.weight_count();
  return total;
}

std::optional<DecomposedConvSpec> decompose(const LayerSpec& parent) {
  if (parent.in_ch % 4 != 0) return std::nullopt;
  int cin = parent.in_ch;
  DecomposedConvSpec spec;
  spec.subs[0] = {1, 1, cin, cin / 4};
  spec.subs[1] = {3, 1, cin / 4, cin / 2};
  spec.subs[2] = {1, 3, cin / 2, cin / 4};
  spec.subs[3] = {1, 1, cin / 4, parent.out_ch};
  return spec;
}

ParamCount param_count(const std::vector<LayerSpec>& seq) {
  ParamCount out;
  for (const LayerSpec& layer : seq) {
    ParamCount::Row row;
    row.layer = layer_kind_name(layer.kind);
    switch (layer.kind) {
      case LayerSpec::Kind::Conv3x3:
        row.quantizable = size_t(9) * layer.in_ch * layer.out_ch;
        break;
      case LayerSpec::Kind::DecomposedConv: {
        auto spec = decompose(layer);
        if (spec) {
          row.quantizable = spec->weight_count();
        } else {
          row.quantizable = size_t(9) * layer.in_ch * layer.out_ch;
        }
        break;
      }
      case LayerSpec::Kind::BatchNorm:
        row.quantizable = size_t(2) * layer.in_ch;  /* gain, bias */
        row.fp32_small = size_t(2) * layer.in_ch;   /* running mean, var */
        break;
      case LayerSpec::Kind::Dense:
        row.quantizable = size_t(layer.in_ch) * layer.out_ch + size_t(layer.out_ch);
        break;
      default:
        break;
    }
    out.quantizable += row.quantizable;
    out.fp32_small += row.fp32_small;
    out.rows.push_back(std::move(row));
  }
  return out;
}

void Layer::zero_grad() {
  for (Param* p : params()) std::fill(p->g.begin(), p->g.end(), 0.0);
}

namespace {

[[noreturn]] void shape_conflict() { throw UsageError("layer/input shape conflict"); }

void require_cache(bool has) {
  if (!has) throw UsageError("backward without forward");
}

}  // namespace

void conv2d_forward(const Tensor& x, const std::vector<double>& kernel,
                    int kh, int kw, int cin, int cout, Tensor& y) {
  if (x.c != cin) shape_conflict();
  y = Tensor(x.n, x.h, x.w, cout);
  int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  for (int n = 0; n < x.n; ++n) {
    for (int i = 0; i < x.h; ++i) {
      for (int j = 0; j < x.w; ++j) {
        double* yrow = &y.v[y.index(n, i, j, 0)];
        for (int di = 0; di < kh; ++di) {
          int ii = i + di - ph;
          if (ii < 0 || ii >= x.h) continue;
          for (int dj = 0; dj < kw; ++dj) {
            int jj = j + dj - pw;
            if (jj < 0 || jj >= x.w) continue;
            const double* xrow = &x.v[x.index(n, ii, jj, 0)];
            const double* krow = &kernel[((size_t(di) * kw + dj) * cin) * cout];
            for (int ci = 0; ci < cin; ++ci) {
              double xv = xrow[ci];
              const double* kc = krow + size_t(ci) * cout;
              for (int o = 0; o < cout; ++o) yrow[o] += xv * kc[o];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const Tensor& x, const std::vector<double>& kernel,
                     int kh, int kw, int cin, int cout, const Tensor& dy,
                     Tensor& dx, std::vector<double>& dkernel) {
  if (x.c != cin || dy.c != cout || dy.n != x.n || dy.h != x.h || dy.w != x.w) {
    shape_conflict();
  }
  dx = Tensor(x.n, x.h, x.w, cin);
  if (dkernel.size() != kernel.size()) dkernel.assign(kernel.size(), 0.0);
  int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  for (int n = 0; n < x.n; ++n) {
    for (int i = 0; i < x.h; ++i) {
      for (int j = 0; j < x.w; ++j) {
        const double* dyrow = &dy.v[dy.index(n, i, j, 0)];
        for (int di = 0; di < kh; ++di) {
          int ii = i + di - ph;
          if (ii < 0 || ii >= x.h) continue;
          for (int dj = 0; dj < kw; ++dj) {
            int jj = j + dj - pw;
            if (jj < 0 || jj >= x.w) continue;
            const double* xrow = &x.v[x.index(n, ii, jj, 0)];
            double* dxrow = &dx.v[dx.index(n, ii, jj, 0)];
            size_t kbase = ((size_t(di) * kw + dj) * cin) * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const double* kc = &kernel[kbase + size_t(ci) * cout];
              double* dkc = &dkernel[kbase + size_t(ci) * cout];
              double xv = xrow[ci];
              double acc = 0.0;
              for (int o = 0; o < cout; ++o) {
                acc += dyrow[o] * kc[o];
                dkc[o] += xv * dyrow[o];
              }
              dxrow[ci] += acc;
            }
          }
        }
      }
    }
  }
}

/* ---- Conv2d ---- */

Conv2d::Conv2d(std::string name, int kh, int kw, int in_ch, int out_ch)
    : kh_(kh), kw_(kw), in_ch_(in_ch), out_ch_(out_ch),
      w_(std::move(name), {kh, kw, in_ch, out_ch}) {}

Tensor Conv2d::forward(const Tensor& x, Mode mode, Rng*) {
  if (x.c != in_ch_) shape_conflict();
  Tensor y;
  conv2d_forward(x, w_.v, kh_, kw_, in_ch_, out_ch_, y);
  if (mode == Mode::Train) {
    cached_x_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  Tensor dx;
  conv2d_backward(cached_x_, w_.v, kh_, kw_, in_ch_, out_ch_, dy, dx, w_.g);
  return dx;
}

/* ---- DecomposedConv ---- */

DecomposedConv::DecomposedConv(const std::string& name,
                               const DecomposedConvSpec& spec) {
  for (size_t i = 0; i < 4; ++i) {
    const auto& s = spec.subs[i];
    subs_[i] = std::make_unique<Conv2d>(name + ".s" + std::to_string(i + 1) + ".w",
                                        s.kh, s.kw, s.in_ch, s.out_ch);
  }
}

Tensor DecomposedConv::forward(const Tensor& x, Mode mode, Rng* rng) {
  Tensor t = x;
  for (auto& sub : subs_) t = sub->forward(t, mode, rng);
  return t;
}

Tensor DecomposedConv::backward(const Tensor& dy) {
  Tensor d = dy;
  for (size_t i = 4; i-- > 0;) d = subs_[i]->backward(d);
  return d;
}

std::vector<Param*> DecomposedConv::params() {
  std::vector<Param*> out;
  for (auto& sub : subs_) {
    for (Param* p : sub->params()) out.push_back(p);
  }
  return out;
}

/* ---- BatchNorm ---- */

BatchNorm::BatchNorm(std::string name, int channels, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum),
      gamma_(name + ".g", {channels}),
      beta_(name + ".b", {channels}),
      mean_(name + ".m", {channels}, false),
      var_(name + ".v", {channels}, false) {
  std::fill(gamma_.v.begin(), gamma_.v.end(), 1.0);
  std::fill(var_.v.begin(), var_.v.end(), 1.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode, Rng*) {
  if (x.c != channels_) shape_conflict();
  size_t per_channel = size_t(x.n) * x.h * x.w;
  Tensor y(x.n, x.h, x.w, x.c);

  if (mode == Mode::Infer) {
    for (int c = 0; c < channels_; ++c) {
      double inv = 1.0 / std::sqrt(var_.v[size_t(c)] + eps_);
      double scale = gamma_.v[size_t(c)] * inv;
      double shift = beta_.v[size_t(c)] - scale * mean_.v[size_t(c)];
      for (size_t i = 0; i < per_channel; ++i) {
        size_t idx = i * size_t(x.c) + size_t(c);
        y.v[idx] = scale * x.v[idx] + shift;
      }
    }
    return y;
  }

  std::vector<double> mu(size_t(channels_), 0.0), sig(size_t(channels_), 0.0);
  for (size_t i = 0; i < x.v.size(); i += size_t(x.c)) {
    for (int c = 0; c < channels_; ++c) mu[size_t(c)] += x.v[i + size_t(c)];
  }
  for (double& m : mu) m /= double(per_channel);
  for (size_t i = 0; i < x.v.size(); i += size_t(x.c)) {
    for (int c = 0; c < channels_; ++c) {
      double d = x.v[i + size_t(c)] - mu[size_t(c)];
      sig[size_t(c)] += d * d;
    }
  }
  for (double& s : sig) s /= double(per_channel);  /* biased variance */

  cached_inv_std_.assign(size_t(channels_), 0.0);
  for (int c = 0; c < channels_; ++c) {
    cached_inv_std_[size_t(c)] = 1.0 / std::sqrt(sig[size_t(c)] + eps_);
  }
  cached_xhat_ = Tensor(x.n, x.h, x.w, x.c);
  for (size_t i = 0; i < x.v.size(); i += size_t(x.c)) {
    for (int c = 0; c < channels_; ++c) {
      double xhat = (x.v[i + size_t(c)] - mu[size_t(c)]) * cached_inv_std_[size_t(c)];
      cached_xhat_.v[i + size_t(c)] = xhat;
      y.v[i + size_t(c)] = gamma_.v[size_t(c)] * xhat + beta_.v[size_t(c)];
    }
  }
  for (int c = 0; c < channels_; ++c) {
    mean_.v[size_t(c)] = momentum_ * mean_.v[size_t(c)] + (1.0 - momentum_) * mu[size_t(c)];
    var_.v[size_t(c)] = momentum_ * var_.v[size_t(c)] + (1.0 - momentum_) * sig[size_t(c)];
  }
  has_cache_ = true;
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (!dy.same_shape(cached_xhat_)) shape_conflict();

  size_t per_channel = size_t(dy.n) * dy.h * dy.w;
  std::vector<double> sum_dy(size_t(channels_), 0.0);
  std::vector<double> sum_dy_xhat(size_t(channels_), 0.0);
  for (size_t i = 0; i < dy.v.size(); i += size_t(dy.c)) {
    for (int c = 0; c < channels_; ++c) {
      sum_dy[size_t(c)] += dy.v[i + size_t(c)];
      sum_dy_xhat[size_t(c)] += dy.v[i + size_t(c)] * cached_xhat_.v[i + size_t(c)];
    }
  }
  for (int c = 0; c < channels_; ++c) {
    gamma_.g[size_t(c)] += sum_dy_xhat[size_t(c)];
    beta_.g[size_t(c)] += sum_dy[size_t(c)];
  }

  Tensor dx(dy.n, dy.h, dy.w, dy.c);
  double inv_m = 1.0 / double(per_channel);
  for (size_t i = 0; i < dy.v.size(); i += size_t(dy.c)) {
    for (int c = 0; c < channels_; ++c) {
      double term = dy.v[i + size_t(c)] -
                    inv_m * (sum_dy[size_t(c)] +
                             cached_xhat_.v[i + size_t(c)] * sum_dy_xhat[size_t(c)]);
      dx.v[i + size_t(c)] = gamma_.v[size_t(c)] * cached_inv_std_[size_t(c)] * term;
    }
  }
  return dx;
}

/* ---- ReLU ---- */

Tensor ReLU::forward(const Tensor& x, Mode mode, Rng*) {
  Tensor y = x;
  for (double& v : y.v) v = std::max(0.0, v);
  if (mode == Mode::Train) {
    cached_x_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (!dy.same_shape(cached_x_)) shape_conflict();
  Tensor dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i) {
    if (cached_x_.v[i] <= 0.0) dx.v[i] = 0.0;
  }
  return dx;
}

/* ---- AvgPool2x2 ---- */

Tensor AvgPool2x2::forward(const Tensor& x, Mode mode, Rng*) {
  if (x.h % 2 != 0 || x.w % 2 != 0) shape_conflict();
  Tensor y(x.n, x.h / 2, x.w / 2, x.c);
  for (int n = 0; n < x.n; ++n) {
    for (int i = 0; i < y.h; ++i) {
      for (int j = 0; j < y.w; ++j) {
        for (int c = 0; c < x.c; ++c) {
          double s = x.at(n, 2 * i, 2 * j, c) + x.at(n, 2 * i, 2 * j + 1, c) +
                     x.at(n, 2 * i + 1, 2 * j, c) + x.at(n, 2 * i + 1, 2 * j + 1, c);
          y.at(n, i, j, c) = 0.25 * s;
        }
      }
    }
  }
  if (mode == Mode::Train) {
    in_h_ = x.h;
    in_w_ = x.w;
    has_cache_ = true;
  }
  return y;
}

Tensor AvgPool2x2::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (dy.h != in_h_ / 2 || dy.w != in_w_ / 2) shape_conflict();
  Tensor dx(dy.n, in_h_, in_w_, dy.c);
  for (int n = 0; n < dy.n; ++n) {
    for (int i = 0; i < dy.h; ++i) {
      for (int j = 0; j < dy.w; ++j) {
        for (int c = 0; c < dy.c; ++c) {
          double g = 0.25 * dy.at(n, i, j, c);
          dx.at(n, 2 * i, 2 * j, c) = g;
          dx.at(n, 2 * i, 2 * j + 1, c) = g;
          dx.at(n, 2 * i + 1, 2 * j, c) = g;
          dx.at(n, 2 * i + 1, 2 * j + 1, c) = g;
        }
      }
    }
  }
  return dx;
}

/* ---- GlobalAvgPool ---- */

Tensor GlobalAvgPool::forward(const Tensor& x, Mode mode, Rng*) {
  Tensor y(x.n, 1, 1, x.c);
  double inv = 1.0 / (double(x.h) * double(x.w));
  for (int n = 0; n < x.n; ++n) {
    for (int i = 0; i < x.h; ++i) {
      for (int j = 0; j < x.w; ++j) {
        for (int c = 0; c < x.c; ++c) {
          y.at(n, 0, 0, c) += x.at(n, i, j, c) * inv;
        }
      }
    }
  }
  if (mode == Mode::Train) {
    in_h_ = x.h;
    in_w_ = x.w;
    has_cache_ = true;
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (dy.h != 1 || dy.w != 1) shape_conflict();
  Tensor dx(dy.n, in_h_, in_w_, dy.c);
  double inv = 1.0 / (double(in_h_) * double(in_w_));
  for (int n = 0; n < dy.n; ++n) {
    for (int i = 0; i < in_h_; ++i) {
      for (int j = 0; j < in_w_; ++j) {
        for (int c = 0; c < dy.c; ++c) {
          dx.at(n, i, j, c) = dy.at(n, 0, 0, c) * inv;
        }
      }
    }
  }
  return dx;
}

/* ---- Dropout ---- */

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng* rng) {
  if (mode == Mode::Infer) return x;
  if (rng == nullptr) throw UsageError("dropout needs an rng in train mode");
  double inv_keep = 1.0 / (1.0 - rate_);
  cached_mask_ = Tensor(x.n, x.h, x.w, x.c);
  Tensor y = x;
  for (size_t i = 0; i < x.v.size(); ++i) {
    double keep = rng->uniform() >= rate_ ? inv_keep : 0.0;
    cached_mask_.v[i] = keep;
    y.v[i] = x.v[i] * keep;
  }
  has_cache_ = true;
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (!dy.same_shape(cached_mask_)) shape_conflict();
  Tensor dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= cached_mask_.v[i];
  return dx;
}

/* ---- Dense ---- */

Dense::Dense(std::string name, int in_dim, int out_dim)
    : in_dim_(in_dim), out_dim_(out_dim),
      w_(name + ".w", {in_dim, out_dim}),
      b_(name + ".b", {out_dim}) {}

Tensor Dense::forward(const Tensor& x, Mode mode, Rng*) {
  if (x.h != 1 || x.w != 1 || x.c != in_dim_) shape_conflict();
  Tensor y(x.n, 1, 1, out_dim_);
  for (int n = 0; n < x.n; ++n) {
    const double* xv = &x.v[x.index(n, 0, 0, 0)];
    double* yv = &y.v[y.index(n, 0, 0, 0)];
    for (int o = 0; o < out_dim_; ++o) yv[o] = b_.v[size_t(o)];
    for (int i = 0; i < in_dim_; ++i) {
      const double* wrow = &w_.v[size_t(i) * out_dim_];
      for (int o = 0; o < out_dim_; ++o) yv[o] += xv[i] * wrow[o];
    }
  }
  if (mode == Mode::Train) {
    cached_x_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (dy.h != 1 || dy.w != 1 || dy.c != out_dim_ || dy.n != cached_x_.n) {
    shape_conflict();
  }
  Tensor dx(dy.n, 1, 1, in_dim_);
  for (int n = 0; n < dy.n; ++n) {
    const double* xv = &cached_x_.v[cached_x_.index(n, 0, 0, 0)];
    const double* dyv = &dy.v[dy.index(n, 0, 0, 0)];
    double* dxv = &dx.v[dx.index(n, 0, 0, 0)];
    for (int o = 0; o < out_dim_; ++o) b_.g[size_t(o)] += dyv[o];
    for (int i = 0; i < in_dim_; ++i) {
      const double* wrow = &w_.v[size_t(i) * out_dim_];
      double* gwrow = &w_.g[size_t(i) * out_dim_];
      double acc = 0.0;
      for (int o = 0; o < out_dim_; ++o) {
        acc += dyv[o] * wrow[o];
        gwrow[o] += xv[i] * dyv[o];
      }
      dxv[i] = acc;
    }
  }
  return dx;
}

/* ---- Softmax ---- */

Tensor softmax(const Tensor& logits) {
  Tensor y = logits;
  for (int n = 0; n < y.n; ++n) {
    for (int i = 0; i < y.h; ++i) {
      for (int j = 0; j < y.w; ++j) {
        double* row = &y.v[y.index(n, i, j, 0)];
        double mx = row[0];
        for (int c = 1; c < y.c; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (int c = 0; c < y.c; ++c) {
          row[c] = std::exp(row[c] - mx);
          sum += row[c];
        }
        for (int c = 0; c < y.c; ++c) row[c] /= sum;
      }
    }
  }
  return y;
}

Tensor SoftmaxLayer::forward(const Tensor& x, Mode mode, Rng*) {
  Tensor y = softmax(x);
  if (mode == Mode::Train) {
    cached_y_ = y;
    has_cache_ = true;
  }
  return y;
}

Tensor SoftmaxLayer::backward(const Tensor& dy) {
  require_cache(has_cache_);
  has_cache_ = false;
  if (!dy.same_shape(cached_y_)) shape_conflict();
  Tensor dx = dy;
  for (int n = 0; n < dy.n; ++n) {
    for (int i = 0; i < dy.h; ++i) {
      for (int j = 0; j < dy.w; ++j) {
        const double* yv = &cached_y_.v[cached_y_.index(n, i, j, 0)];
        const double* dyv = &dy.v[dy.index(n, i, j, 0)];
        double* dxv = &dx.v[dx.index(n, i, j, 0)];
        double dot = 0.0;
        for (int c = 0; c < dy.c; ++c) dot += dyv[c] * yv[c];
        for (int c = 0; c < dy.c; ++c) dxv[c] = yv[c] * (dyv[c] - dot);
      }
    }
  }
  return dx;
}

}  // namespace lcasc
