#include "lcasc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lcasc/errors.hpp"

namespace lcasc {

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (l2 < 0.0) throw UsageError("train: l2 must be >= 0");
  if (!(lr > 0.0)) throw UsageError("train: lr must be > 0");
  if (epochs < 0) throw UsageError("train: epochs must be >= 0");
  if (stop_at_acc < 0.0 || stop_at_acc > 1.0) {
    throw UsageError("train: stop_at_acc must be in [0, 1]");
  }
}

void AdamState::init(const std::vector<Param*>& params) {
  m.clear();
  v.clear();
  for (const Param* p : params) {
    m.emplace_back(p->count(), 0.0);
    v.emplace_back(p->count(), 0.0);
  }
  t = 0;
}

namespace {

double regularizer(const std::vector<Param*>& theta, double l2) {
  if (l2 == 0.0) return 0.0;
  double sq = 0.0;
  for (const Param* p : theta) {
    if (!p->trainable) continue;
    for (double w : p->v) sq += w * w;
  }
  return 0.5 * l2 * sq;
}

}  // namespace

double kl_loss(const std::vector<LabelVector>& y,
               const std::vector<std::vector<double>>& yhat,
               const std::vector<Param*>& theta, double l2) {
  if (y.size() != yhat.size()) throw UsageError("kl_loss: batch size mismatch");
  double loss = 0.0;
  for (size_t n = 0; n < y.size(); ++n) {
    y[n].validate();
    if (y[n].p.size() != yhat[n].size()) {
      throw UsageError("kl_loss: class count mismatch");
    }
    for (size_t c = 0; c < yhat[n].size(); ++c) {
      double q = yhat[n][c];
      if (!(q > 0.0) || !std::isfinite(q)) {
        throw DataError("invalid probability input");
      }
      double p = y[n].p[c];
      if (p > 0.0) loss += p * std::log(p / q);
    }
  }
  return loss + regularizer(theta, l2);
}

double loss_gradient(const std::vector<LabelVector>& y, const Tensor& logits,
                     const std::vector<Param*>& theta, double l2,
                     Tensor* dlogits) {
  if (logits.n != int(y.size()) || logits.h != 1 || logits.w != 1) {
    throw UsageError("loss_gradient: logits shape mismatch");
  }
  Tensor probs = softmax(logits);

  double loss = 0.0;
  if (dlogits != nullptr) *dlogits = probs;
  for (int n = 0; n < logits.n; ++n) {
    y[size_t(n)].validate();
    if (int(y[size_t(n)].p.size()) != logits.c) {
      throw UsageError("loss_gradient: class count mismatch");
    }
    for (int c = 0; c < logits.c; ++c) {
      double p = y[size_t(n)].p[size_t(c)];
      double q = probs.at(n, 0, 0, c);
      if (p > 0.0) loss += p * std::log(p / q);
      if (dlogits != nullptr) dlogits->at(n, 0, 0, c) -= p;
    }
  }

  for (Param* p : theta) {
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->v.size(); ++i) p->g[i] += l2 * p->v[i];
  }
  return loss + regularizer(theta, l2);
}

void adam_step(const std::vector<Param*>& theta, AdamState& state,
               const TrainConfig& cfg) {
  if (state.m.size() != theta.size()) {
    throw UsageError("adam_step: state does not match parameter list");
  }
  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  for (size_t i = 0; i < theta.size(); ++i) {
    Param* p = theta[i];
    if (state.m[i].size() != p->count()) {
      throw UsageError("adam_step: state shape mismatch");
    }
    for (size_t j = 0; j < p->count(); ++j) {
      double g = p->g[j];
      state.m[i][j] = cfg.beta1 * state.m[i][j] + (1.0 - cfg.beta1) * g;
      state.v[i][j] = cfg.beta2 * state.v[i][j] + (1.0 - cfg.beta2) * g * g;
      double mhat = state.m[i][j] / bc1;
      double vhat = state.v[i][j] / bc2;
      p->v[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Tensor center_crop(const Tensor& spec, int target) {
  if (target > spec.w) throw UsageError("crop larger than input");
  if (target == spec.w) return spec;
  int start = (spec.w - target) / 2;
  Tensor out = Tensor::spectrogram(spec.h, target, spec.c);
  for (int f = 0; f < spec.h; ++f) {
    for (int t = 0; t < target; ++t) {
      for (int ch = 0; ch < spec.c; ++ch) {
        out.sp(f, t, ch) = spec.sp(f, start + t, ch);
      }
    }
  }
  return out;
}

namespace {

Tensor stack(const std::vector<Tensor>& items) {
  const Tensor& first = items.front();
  Tensor out(int(items.size()), first.h, first.w, first.c);
  size_t per = first.v.size();
  for (size_t i = 0; i < items.size(); ++i) {
    if (!items[i].same_shape(first)) throw DataError("batch inputs have mixed shapes");
    std::copy(items[i].v.begin(), items[i].v.end(), out.v.begin() + i * per);
  }
  return out;
}

int argmax(const double* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double train_accuracy(Network& net, const std::vector<Tensor>& features,
                      const std::vector<LabelVector>& labels, int crop_target,
                      int batch_size) {
  size_t correct = 0;
  size_t i = 0;
  while (i < features.size()) {
    size_t count = std::min(size_t(batch_size), features.size() - i);
    std::vector<Tensor> cropped;
    cropped.reserve(count);
    for (size_t j = 0; j < count; ++j) {
      cropped.push_back(center_crop(features[i + j], crop_target));
    }
    Tensor logits = net.forward_logits(stack(cropped), Mode::Infer, nullptr);
    for (size_t j = 0; j < count; ++j) {
      int pred = argmax(&logits.v[logits.index(int(j), 0, 0, 0)], logits.c);
      int truth = argmax(labels[i + j].p.data(), int(labels[i + j].p.size()));
      if (pred == truth) ++correct;
    }
    i += count;
  }
  return double(correct) / double(features.size());
}

}  // namespace

TrainResult train_loop(Network& net, const std::vector<Tensor>& features,
                       const std::vector<LabelVector>& labels,
                       const TrainConfig& cfg, const AugmentConfig& aug,
                       std::ostream* log_out) {
  cfg.validate();
  aug.validate();
  if (features.empty()) throw DataError("no training features");
  if (features.size() != labels.size()) {
    throw DataError("feature and label counts differ");
  }

  Rng rng(cfg.seed);
  std::vector<Param*> theta = net.trainable_params();
  AdamState adam;
  adam.init(theta);

  std::vector<size_t> order(features.size());
  std::iota(order.begin(), order.end(), size_t(0));

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;

    size_t i = 0;
    while (i < order.size()) {
      size_t count = std::min(size_t(cfg.batch_size), order.size() - i);
      Batch batch;
      batch.inputs.reserve(count);
      batch.labels.reserve(count);
      for (size_t j = 0; j < count; ++j) {
        batch.inputs.push_back(features[order[i + j]]);
        batch.labels.push_back(labels[order[i + j]]);
      }
      Batch augmented = augment_batch(batch, aug, rng);

      net.zero_grad();
      Tensor logits = net.forward_logits(stack(augmented.inputs), Mode::Train, &rng);
      Tensor dlogits;
      epoch_loss += loss_gradient(augmented.labels, logits, theta, cfg.l2, &dlogits);
      net.backward_from_logits(dlogits);
      adam_step(theta, adam, cfg);
      i += count;
    }

    double acc = train_accuracy(net, features, labels, aug.crop_target, cfg.batch_size);
    result.log.push_back({epoch, epoch_loss, acc});
    if (log_out != nullptr) {
      (*log_out) << "epoch=" << epoch << " loss=" << epoch_loss
                 << " acc=" << acc << "\n";
    }
    if (cfg.stop_at_acc > 0.0 && acc >= cfg.stop_at_acc) break;
  }
  return result;
}

}  // namespace lcasc
