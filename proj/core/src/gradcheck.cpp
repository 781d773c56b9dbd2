#include "lcasc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lcasc/train.hpp"

namespace lcasc {

namespace {

double weighted_output(Layer& layer, const Tensor& x,
                       const std::vector<double>& r, uint64_t seed) {
  /* Re-seeding per call replays the same dropout mask on every forward. */
  Rng rng(seed);
  Tensor y = layer.forward(x, Mode::Train, &rng);
  double acc = 0.0;
  for (size_t i = 0; i < y.v.size(); ++i) acc += r[i] * y.v[i];
  return acc;
}

void fold_err(double analytic, double numeric, GradCheckResult& res) {
  double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  double err = std::fabs(analytic - numeric) / denom;
  res.max_rel_err = std::max(res.max_rel_err, err);
  ++res.checks;
}

double network_loss(Network& net, const Tensor& x,
                    const std::vector<LabelVector>& y, double l2,
                    uint64_t seed) {
  Rng rng(seed);
  Tensor probs = softmax(net.forward_logits(x, Mode::Train, &rng));
  std::vector<std::vector<double>> yhat(size_t(probs.n));
  for (int n = 0; n < probs.n; ++n) {
    yhat[size_t(n)].resize(size_t(probs.c));
    for (int c = 0; c < probs.c; ++c) yhat[size_t(n)][size_t(c)] = probs.at(n, 0, 0, c);
  }
  return kl_loss(y, yhat, net.trainable_params(), l2);
}

Tensor random_input(int n, int h, int w, int c, Rng& rng, bool off_kink) {
  Tensor t(n, h, w, c);
  for (double& x : t.v) {
    /* Keeping |x| >= 0.25 leaves central differences on one side of any
     * piecewise boundary. */
    x = off_kink ? (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.25, 1.0)
                 : rng.uniform(-1.0, 1.0);
  }
  return t;
}

}  // namespace

GradCheckResult check_layer(Layer& layer, const Tensor& x, uint64_t seed,
                            double h) {
  Rng shape_rng(seed);
  Tensor y0 = layer.forward(x, Mode::Train, &shape_rng);
  Rng up_rng(seed + 1);
  std::vector<double> r(y0.v.size());
  for (double& ri : r) ri = up_rng.uniform(-1.0, 1.0);

  layer.zero_grad();
  {
    Rng rng(seed);
    layer.forward(x, Mode::Train, &rng);
  }
  Tensor dy = y0;
  dy.v = r;
  Tensor dx = layer.backward(dy);

  GradCheckResult res;
  Tensor probe = x;
  for (size_t j = 0; j < x.v.size(); ++j) {
    double orig = probe.v[j];
    probe.v[j] = orig + h;
    double fp = weighted_output(layer, probe, r, seed);
    probe.v[j] = orig - h;
    double fm = weighted_output(layer, probe, r, seed);
    probe.v[j] = orig;
    fold_err(dx.v[j], (fp - fm) / (2.0 * h), res);
  }
  for (Param* p : layer.params()) {
    /* Running statistics take no gradient and do not enter train-mode
     * output, so only trainables are probed. */
    if (!p->trainable) continue;
    for (size_t j = 0; j < p->v.size(); ++j) {
      double orig = p->v[j];
      p->v[j] = orig + h;
      double fp = weighted_output(layer, x, r, seed);
      p->v[j] = orig - h;
      double fm = weighted_output(layer, x, r, seed);
      p->v[j] = orig;
      fold_err(p->g[j], (fp - fm) / (2.0 * h), res);
    }
  }
  return res;
}

GradCheckResult check_network(Network& net, const Tensor& x,
                              const std::vector<int>& label_indices,
                              double l2, uint64_t seed, int max_probes,
                              double h) {
  std::vector<LabelVector> y;
  y.reserve(label_indices.size());
  for (int idx : label_indices) {
    y.push_back(LabelVector::one_hot(idx, net.spec().num_classes));
  }

  net.zero_grad();
  Rng rng(seed);
  Tensor logits = net.forward_logits(x, Mode::Train, &rng);
  Tensor dlogits = logits;
  loss_gradient(y, logits, net.trainable_params(), l2, &dlogits);
  Tensor dx = net.backward_from_logits(dlogits);

  GradCheckResult res;
  Rng pick(seed + 2);
  for (Param* p : net.trainable_params()) {
    size_t probes = std::min(size_t(max_probes), p->v.size());
    for (size_t k = 0; k < probes; ++k) {
      size_t j = pick.uniform_index(p->v.size());
      double orig = p->v[j];
      p->v[j] = orig + h;
      double fp = network_loss(net, x, y, l2, seed);
      p->v[j] = orig - h;
      double fm = network_loss(net, x, y, l2, seed);
      p->v[j] = orig;
      fold_err(p->g[j], (fp - fm) / (2.0 * h), res);
    }
  }
  Tensor probe = x;
  size_t input_probes = std::min<size_t>(8, probe.v.size());
  for (size_t k = 0; k < input_probes; ++k) {
    size_t j = pick.uniform_index(probe.v.size());
    double orig = probe.v[j];
    probe.v[j] = orig + h;
    double fp = network_loss(net, probe, y, l2, seed);
    probe.v[j] = orig - h;
    double fm = network_loss(net, probe, y, l2, seed);
    probe.v[j] = orig;
    fold_err(dx.v[j], (fp - fm) / (2.0 * h), res);
  }
  return res;
}

std::vector<SuiteLine> layer_suite(uint64_t seed, double tol) {
  std::vector<SuiteLine> lines;
  auto run = [&](const std::string& name, Layer& layer, const Tensor& x) {
    SuiteLine line;
    line.name = name;
    line.result = check_layer(layer, x, seed);
    line.ok = line.result.max_rel_err <= tol;
    lines.push_back(std::move(line));
  };

  Rng rng(seed * 7919 + 1);
  {
    Conv2d conv("c1.w", 3, 3, 2, 3);
    for (double& w : conv.weights().v) w = rng.uniform(-0.5, 0.5);
    run("conv3x3", conv, random_input(2, 4, 5, 2, rng, false));
  }
  {
    LayerSpec parent{LayerSpec::Kind::DecomposedConv, 4, 8, 0.0};
    DecomposedConv dec("c2", *decompose(parent));
    for (Param* p : dec.params()) {
      for (double& w : p->v) w = rng.uniform(-0.5, 0.5);
    }
    run("decomposed_conv", dec, random_input(2, 4, 4, 4, rng, false));
  }
  {
    BatchNorm bn("bn1", 3);
    for (double& g : bn.params()[0]->v) g = rng.uniform(0.5, 1.5);
    for (double& b : bn.params()[1]->v) b = rng.uniform(-0.5, 0.5);
    run("batchnorm", bn, random_input(2, 3, 4, 3, rng, false));
  }
  {
    ReLU relu;
    run("relu", relu, random_input(2, 4, 4, 3, rng, true));
  }
  {
    AvgPool2x2 pool;
    run("avgpool", pool, random_input(2, 4, 6, 3, rng, false));
  }
  {
    GlobalAvgPool gap;
    run("gap", gap, random_input(2, 3, 5, 4, rng, false));
  }
  {
    Dropout drop(0.10);
    run("dropout", drop, random_input(2, 4, 4, 3, rng, false));
  }
  {
    Dense fc("fc", 6, 10);
    for (double& w : fc.params()[0]->v) w = rng.uniform(-0.5, 0.5);
    for (double& b : fc.params()[1]->v) b = rng.uniform(-0.5, 0.5);
    run("dense", fc, random_input(3, 1, 1, 6, rng, false));
  }
  {
    SoftmaxLayer sm;
    run("softmax", sm, random_input(2, 1, 1, 5, rng, false));
  }
  return lines;
}

}  // namespace lcasc
