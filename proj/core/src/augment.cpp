#include "lcasc/augment.hpp"

#include <cmath>
#include <numeric>

#include "lcasc/errors.hpp"

namespace lcasc {

void LabelVector::validate() const {
  if (p.empty()) throw DataError("label vector is empty");
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw DataError("label vector has a negative or non-finite entry");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw DataError("label vector does not sum to 1");
  }
}

LabelVector LabelVector::one_hot(int cls, int num_classes) {
  if (cls < 0 || cls >= num_classes) throw UsageError("one_hot: class out of range");
  LabelVector y;
  y.p.assign(size_t(num_classes), 0.0);
  y.p[size_t(cls)] = 1.0;
  return y;
}

void Batch::validate() const {
  if (inputs.empty()) throw DataError("batch is empty");
  if (inputs.size() != labels.size()) {
    throw DataError("batch inputs and labels differ in count");
  }
  for (const Tensor& x : inputs) {
    if (!x.same_shape(inputs.front())) {
      throw DataError("batch inputs have mixed shapes");
    }
  }
  for (const LabelVector& y : labels) y.validate();
}

void AugmentConfig::validate() const {
  if (crop_target < 1) throw UsageError("augment: crop_target must be >= 1");
  if (erase_bins < 0) throw UsageError("augment: erase_bins must be >= 0");
  if (erase_axis_prob < 0.0 || erase_axis_prob > 1.0) {
    throw UsageError("augment: erase_axis_prob must be in [0, 1]");
  }
  if (!(alpha > 0.0)) throw UsageError("augment: alpha must be > 0");
}

Tensor random_crop(const Tensor& spec, int target, Rng& rng) {
  if (target > spec.w) throw UsageError("crop larger than input");
  size_t start = rng.uniform_index(size_t(spec.w - target) + 1);
  if (target == spec.w) return spec;
  Tensor out = Tensor::spectrogram(spec.h, target, spec.c);
  for (int f = 0; f < spec.h; ++f) {
    for (int t = 0; t < target; ++t) {
      for (int ch = 0; ch < spec.c; ++ch) {
        out.sp(f, t, ch) = spec.sp(f, int(start) + t, ch);
      }
    }
  }
  return out;
}

Tensor spec_erase(const Tensor& spec, int n_bins, double time_axis_prob, Rng& rng) {
  bool time_axis = rng.uniform() < time_axis_prob;
  int axis_len = time_axis ? spec.w : spec.h;
  if (n_bins > axis_len) throw UsageError("erase block too large");
  if (n_bins == 0) return spec;
  int start = int(rng.uniform_index(size_t(axis_len - n_bins) + 1));

  Tensor out = spec;
  if (time_axis) {
    for (int f = 0; f < spec.h; ++f) {
      for (int t = start; t < start + n_bins; ++t) {
        for (int ch = 0; ch < spec.c; ++ch) out.sp(f, t, ch) = 0.0;
      }
    }
  } else {
    for (int f = start; f < start + n_bins; ++f) {
      for (int t = 0; t < spec.w; ++t) {
        for (int ch = 0; ch < spec.c; ++ch) out.sp(f, t, ch) = 0.0;
      }
    }
  }
  return out;
}

Batch mixup_with_ratio(const Batch& batch, double ratio, Rng& rng) {
  size_t n = batch.inputs.size();
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t(0));
  rng.shuffle(perm);

  Batch out;
  out.inputs.resize(n);
  out.labels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const Tensor& a = batch.inputs[i];
    const Tensor& b = batch.inputs[perm[i]];
    Tensor mixed = a;
    for (size_t j = 0; j < mixed.v.size(); ++j) {
      mixed.v[j] = ratio * a.v[j] + (1.0 - ratio) * b.v[j];
    }
    out.inputs[i] = std::move(mixed);

    const LabelVector& ya = batch.labels[i];
    const LabelVector& yb = batch.labels[perm[i]];
    LabelVector y;
    y.p.resize(ya.p.size());
    for (size_t j = 0; j < y.p.size(); ++j) {
      y.p[j] = ratio * ya.p[j] + (1.0 - ratio) * yb.p[j];
    }
    out.labels[i] = std::move(y);
  }
  return out;
}

Batch mixup(const Batch& batch, const AugmentConfig& cfg, Rng& rng) {
  batch.validate();
  cfg.validate();
  double ratio = cfg.mixup_dist == MixupDist::Beta
                     ? rng.beta(cfg.alpha, cfg.alpha)
                     : rng.uniform();
  return mixup_with_ratio(batch, ratio, rng);
}

Batch augment_batch(const Batch& batch, const AugmentConfig& cfg, Rng& rng) {
  batch.validate();
  cfg.validate();
  Batch staged;
  staged.labels = batch.labels;
  staged.inputs.reserve(batch.inputs.size());
  for (const Tensor& x : batch.inputs) {
    Tensor cropped = random_crop(x, cfg.crop_target, rng);
    staged.inputs.push_back(
        spec_erase(cropped, cfg.erase_bins, cfg.erase_axis_prob, rng));
  }
  return mixup(staged, cfg, rng);
}

}  // namespace lcasc
