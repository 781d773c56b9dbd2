#pragma once

#include <cstdint>
#include <vector>

#include "lcasc/rng.hpp"
#include "lcasc/tensor.hpp"

namespace lcasc {

/* Soft class-probability label. Entries are >= 0 and sum to 1 (within 1e-6);
 * mixup keeps labels on the simplex rather than one-hot. */
struct LabelVector {
  std::vector<double> p;

  void validate() const;  /* throws DataError */
  static LabelVector one_hot(int cls, int num_classes);
};

struct Batch {
  std::vector<Tensor> inputs;
  std::vector<LabelVector> labels;

  void validate() const;  /* throws DataError: N >= 1, shapes equal */
};

enum class MixupDist : uint8_t { Beta = 0, Uniform = 1 };

struct AugmentConfig {
  int crop_target = 128;
  int erase_bins = 10;
  double erase_axis_prob = 0.5;  /* probability of erasing along time */
  MixupDist mixup_dist = MixupDist::Beta;
  double alpha = 0.4;
  uint64_t rng_seed = 0;

  void validate() const;  /* throws UsageError */
};

/* Crops the frame axis to target frames at a uniformly random start. */
Tensor random_crop(const Tensor& spec, int target, Rng& rng);

/* Zeroes one contiguous slab of n_bins indices, on the time axis with
 * probability time_axis_prob and the frequency axis otherwise. The slab
 * spans the full other axis and all channels. */
Tensor spec_erase(const Tensor& spec, int n_bins, double time_axis_prob, Rng& rng);

/* Blends the batch with a permuted copy of itself. One ratio is drawn per
 * batch from cfg.mixup_dist, then a random permutation pairs the items:
 * x'_i = ratio*x_i + (1-ratio)*x_perm(i), same for labels. */
Batch mixup(const Batch& batch, const AugmentConfig& cfg, Rng& rng);

/* mixup with the ratio already fixed; mixup draws the ratio and delegates. */
Batch mixup_with_ratio(const Batch& batch, double ratio, Rng& rng);

/* crop, erase, mixup, in that order. */
Batch augment_batch(const Batch& batch, const AugmentConfig& cfg, Rng& rng);

}  // namespace lcasc
