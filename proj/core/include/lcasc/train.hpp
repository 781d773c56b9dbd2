#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lcasc/augment.hpp"
#include "lcasc/model.hpp"

namespace lcasc {

struct TrainConfig {
  int batch_size = 100;
  double l2 = 1e-4;     /* lambda of the regularized loss */
  double lr = 1e-3;
  int epochs = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t seed = 1;
  /* Stop once logged train accuracy reaches this value; 0 disables. */
  double stop_at_acc = 0.0;

  void validate() const;  /* throws UsageError */
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;

  void init(const std::vector<Param*>& params);
};

/* Batch-summed KL divergence plus (l2/2)*||theta||^2 over the trainable
 * parameters. Terms with y=0 contribute 0; any yhat entry <= 0 is an error. */
double kl_loss(const std::vector<LabelVector>& y,
               const std::vector<std::vector<double>>& yhat,
               const std::vector<Param*>& theta, double l2);

/* Loss and gradients in one pass, working on logits: dlogits row n is
 * softmax(logits_n) - y_n, and l2*theta accumulates into each Param::g.
 * Returns the loss value. */
double loss_gradient(const std::vector<LabelVector>& y, const Tensor& logits,
                     const std::vector<Param*>& theta, double l2,
                     Tensor* dlogits);

/* One Adam update with bias correction, consuming Param::g. */
void adam_step(const std::vector<Param*>& theta, AdamState& state,
               const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double acc = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
};

/* Training loop over in-memory features (n_filters x frames x 3 each).
 * Per epoch: shuffle, batch, augment, forward in train mode, loss, backprop,
 * Adam; then log the loss sum and unaugmented center-cropped train accuracy
 * as `epoch=<k> loss=<float> acc=<float>` to log_out when given. */
TrainResult train_loop(Network& net, const std::vector<Tensor>& features,
                       const std::vector<LabelVector>& labels,
                       const TrainConfig& cfg, const AugmentConfig& aug,
                       std::ostream* log_out);

/* Center temporal crop used for evaluation-style forwards. */
Tensor center_crop(const Tensor& spec, int target);

}  // namespace lcasc
