#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lcasc/errors.hpp"
#include "lcasc/gradcheck.hpp"
#include "lcasc/nn.hpp"

using namespace lcasc;

namespace {

Tensor random_tensor(int n, int h, int w, int c, uint64_t seed) {
  Tensor t(n, h, w, c);
  Rng rng(seed);
  for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("conv keeps spatial size, maps channels") {
  Conv2d conv("c.w", 3, 3, 3, 16);
  Tensor x = random_tensor(2, 10, 12, 3, 1);
  Tensor y = conv.forward(x, Mode::Infer, nullptr);
  CHECK(y.n == 2);
  CHECK(y.h == 10);
  CHECK(y.w == 12);
  CHECK(y.c == 16);
}

TEST_CASE("identity kernel passes the input through") {
  Conv2d conv("c.w", 3, 3, 2, 2);
  Param& w = conv.weights();
  std::fill(w.v.begin(), w.v.end(), 0.0);
  /* Kernel layout [kh][kw][cin][cout]: centre tap, cin == cout. */
  for (int c = 0; c < 2; ++c) {
    w.v[size_t(((1 * 3 + 1) * 2 + c) * 2 + c)] = 1.0;
  }
  Tensor x = random_tensor(1, 5, 6, 2, 2);
  Tensor y = conv.forward(x, Mode::Infer, nullptr);
  for (size_t i = 0; i < x.v.size(); ++i) {
    CHECK(y.v[i] == doctest::Approx(x.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv zero-pads the border") {
  Conv2d conv("c.w", 3, 3, 1, 1);
  Param& w = conv.weights();
  std::fill(w.v.begin(), w.v.end(), 1.0);
  Tensor x(1, 3, 3, 1);
  for (double& v : x.v) v = 1.0;
  Tensor y = conv.forward(x, Mode::Infer, nullptr);
  CHECK(y.at(0, 1, 1, 0) == doctest::Approx(9.0));
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 1, 0) == doctest::Approx(6.0));
}

TEST_CASE("decomposition arithmetic") {
  auto count = [](int cin, int cout) {
    LayerSpec spec{LayerSpec::Kind::DecomposedConv, cin, cout, 0.0};
    return decompose(spec);
  };
  CHECK(count(64, 64)->weight_count() == 5120);
  CHECK(count(128, 128)->weight_count() == 20480);
  CHECK(count(16, 32)->weight_count() == 16 * 16 + 16 * 32 / 4);
  CHECK(!count(3, 16).has_value());

  auto sub = *count(64, 128);
  CHECK(sub.subs[0].kh == 1);
  CHECK(sub.subs[0].kw == 1);
  CHECK(sub.subs[0].out_ch == 16);
  CHECK(sub.subs[1].kh == 3);
  CHECK(sub.subs[1].kw == 1);
  CHECK(sub.subs[1].out_ch == 32);
  CHECK(sub.subs[2].kh == 1);
  CHECK(sub.subs[2].kw == 3);
  CHECK(sub.subs[2].out_ch == 16);
  CHECK(sub.subs[3].out_ch == 128);
  CHECK(sub.weight_count() == 64 * 64 + 64 * 128 / 4);
}

TEST_CASE("decomposed conv is linear in its input") {
  LayerSpec spec{LayerSpec::Kind::DecomposedConv, 4, 8, 0.0};
  DecomposedConv dec("c2", *decompose(spec));
  Rng rng(3);
  for (Param* p : dec.params()) {
    for (double& w : p->v) w = rng.uniform(-0.5, 0.5);
  }
  Tensor a = random_tensor(1, 6, 6, 4, 4);
  Tensor b = random_tensor(1, 6, 6, 4, 5);
  Tensor mix = a;
  for (size_t i = 0; i < mix.v.size(); ++i) mix.v[i] = 2.0 * a.v[i] - 3.0 * b.v[i];

  Tensor ya = dec.forward(a, Mode::Infer, nullptr);
  Tensor yb = dec.forward(b, Mode::Infer, nullptr);
  Tensor ymix = dec.forward(mix, Mode::Infer, nullptr);
  for (size_t i = 0; i < ymix.v.size(); ++i) {
    CHECK(ymix.v[i] == doctest::Approx(2.0 * ya.v[i] - 3.0 * yb.v[i]).epsilon(1e-9));
  }
}

TEST_CASE("parameter counting per layer table") {
  std::vector<LayerSpec> m1_convs = {
      {LayerSpec::Kind::Conv3x3, 3, 16, 0.0},
      {LayerSpec::Kind::Conv3x3, 16, 32, 0.0},
      {LayerSpec::Kind::Conv3x3, 32, 64, 0.0},
      {LayerSpec::Kind::Conv3x3, 64, 128, 0.0},
  };
  ParamCount pc = param_count(m1_convs);
  CHECK(pc.quantizable == 97200);
  CHECK(pc.fp32_small == 0);

  std::vector<LayerSpec> tail = {
      {LayerSpec::Kind::BatchNorm, 16, 0, 0.0},
      {LayerSpec::Kind::Dense, 128, 10, 0.0},
  };
  ParamCount tail_pc = param_count(tail);
  CHECK(tail_pc.quantizable == 2 * 16 + 128 * 10 + 10);
  CHECK(tail_pc.fp32_small == 2 * 16);
}

TEST_CASE("batchnorm inference applies the affine closed form") {
  BatchNorm bn("bn", 2);
  auto params = bn.params();
  params[0]->v = {2.0, 0.5};   /* gamma */
  params[1]->v = {1.0, -1.0};  /* beta */
  params[2]->v = {3.0, -2.0};  /* running mean */
  params[3]->v = {4.0, 0.25};  /* running var */
  Tensor x = random_tensor(2, 3, 3, 2, 6);
  Tensor y = bn.forward(x, Mode::Infer, nullptr);
  for (int n = 0; n < 2; ++n) {
    for (int h = 0; h < 3; ++h) {
      for (int w = 0; w < 3; ++w) {
        for (int c = 0; c < 2; ++c) {
          double g = params[0]->v[size_t(c)];
          double b = params[1]->v[size_t(c)];
          double m = params[2]->v[size_t(c)];
          double v = params[3]->v[size_t(c)];
          double want = g * (x.at(n, h, w, c) - m) / std::sqrt(v + bn.eps()) + b;
          CHECK(y.at(n, h, w, c) == doctest::Approx(want).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("batchnorm train normalizes the batch and tracks running stats") {
  BatchNorm bn("bn", 1);
  Tensor x(4, 1, 1, 1);
  x.v = {1.0, 2.0, 3.0, 6.0};
  Tensor y = bn.forward(x, Mode::Train, nullptr);

  double mean = 3.0;
  double var = (4.0 + 1.0 + 0.0 + 9.0) / 4.0;  /* biased */
  for (int n = 0; n < 4; ++n) {
    double want = (x.v[size_t(n)] - mean) / std::sqrt(var + bn.eps());
    CHECK(y.v[size_t(n)] == doctest::Approx(want).epsilon(1e-12));
  }
  auto params = bn.params();
  CHECK(params[2]->v[0] == doctest::Approx(0.9 * 0.0 + 0.1 * mean));
  CHECK(params[3]->v[0] == doctest::Approx(0.9 * 1.0 + 0.1 * var));
}

TEST_CASE("relu clamps negatives and routes gradients") {
  ReLU relu;
  Tensor x(1, 1, 1, 4);
  x.v = {-2.0, -0.5, 0.5, 2.0};
  Tensor y = relu.forward(x, Mode::Train, nullptr);
  CHECK(y.v == std::vector<double>{0.0, 0.0, 0.5, 2.0});
  Tensor dy(1, 1, 1, 4);
  dy.v = {1.0, 1.0, 1.0, 1.0};
  Tensor dx = relu.backward(dy);
  CHECK(dx.v == std::vector<double>{0.0, 0.0, 1.0, 1.0});
}

TEST_CASE("avgpool halves even inputs and rejects odd ones") {
  AvgPool2x2 pool;
  Tensor x(1, 4, 6, 2);
  for (size_t i = 0; i < x.v.size(); ++i) x.v[i] = double(i);
  Tensor y = pool.forward(x, Mode::Infer, nullptr);
  CHECK(y.h == 2);
  CHECK(y.w == 3);
  CHECK(y.c == 2);
  double want = (x.at(0, 0, 0, 0) + x.at(0, 0, 1, 0) + x.at(0, 1, 0, 0) +
                 x.at(0, 1, 1, 0)) / 4.0;
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(want));

  Tensor odd(1, 5, 6, 2);
  CHECK_THROWS_WITH_AS(pool.forward(odd, Mode::Infer, nullptr),
                       "layer/input shape conflict", UsageError);
}

TEST_CASE("global average pool reduces to 1x1") {
  GlobalAvgPool gap;
  Tensor x = random_tensor(2, 3, 5, 4, 8);
  Tensor y = gap.forward(x, Mode::Infer, nullptr);
  CHECK(y.h == 1);
  CHECK(y.w == 1);
  CHECK(y.c == 4);
  double acc = 0.0;
  for (int h = 0; h < 3; ++h) {
    for (int w = 0; w < 5; ++w) acc += x.at(1, h, w, 2);
  }
  CHECK(y.at(1, 0, 0, 2) == doctest::Approx(acc / 15.0).epsilon(1e-12));
}

TEST_CASE("dropout scales survivors and is identity at inference") {
  Dropout drop(0.10);
  Tensor x(1, 8, 8, 4);
  for (double& v : x.v) v = 1.0;

  Tensor inf = drop.forward(x, Mode::Infer, nullptr);
  CHECK(inf.v == x.v);

  Rng rng(5);
  Tensor tr = drop.forward(x, Mode::Train, &rng);
  int dropped = 0;
  for (double v : tr.v) {
    bool kept = v == doctest::Approx(1.0 / 0.9).epsilon(1e-12);
    bool zero = v == 0.0;
    CHECK((kept || zero));
    dropped += zero;
  }
  CHECK(dropped > 0);
  CHECK(dropped < 80);  /* ~10% of 256 */

  CHECK_THROWS_WITH_AS(drop.forward(x, Mode::Train, nullptr),
                       "dropout needs an rng in train mode", UsageError);
  CHECK_THROWS_AS(Dropout(1.0), UsageError);
}

TEST_CASE("dense affine map") {
  Dense fc("fc", 3, 2);
  auto params = fc.params();
  params[0]->v = {1.0, 0.0, 0.0, 1.0, 2.0, -1.0};  /* [in][out] row-major */
  params[1]->v = {0.5, -0.5};
  Tensor x(1, 1, 1, 3);
  x.v = {1.0, 2.0, 3.0};
  Tensor y = fc.forward(x, Mode::Infer, nullptr);
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(1.0 + 0.0 + 6.0 + 0.5));
  CHECK(y.at(0, 0, 0, 1) == doctest::Approx(0.0 + 2.0 - 3.0 - 0.5));
}

TEST_CASE("softmax is a positive simplex point and shift invariant") {
  Tensor logits(2, 1, 1, 5);
  Rng rng(9);
  for (double& v : logits.v) v = rng.uniform(-50.0, 50.0);
  Tensor p = softmax(logits);
  for (int n = 0; n < 2; ++n) {
    double sum = 0.0;
    for (int c = 0; c < 5; ++c) {
      CHECK(p.at(n, 0, 0, c) > 0.0);
      sum += p.at(n, 0, 0, c);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  Tensor shifted = logits;
  for (int c = 0; c < 5; ++c) shifted.at(0, 0, 0, c) += 123.0;
  Tensor q = softmax(shifted);
  for (int c = 0; c < 5; ++c) {
    CHECK(q.at(0, 0, 0, c) == doctest::Approx(p.at(0, 0, 0, c)).epsilon(1e-9));
  }
}

TEST_CASE("softmax survives extreme logits") {
  Tensor logits(1, 1, 1, 3);
  logits.v = {1000.0, -1000.0, 999.0};
  Tensor p = softmax(logits);
  CHECK(p.finite());
  CHECK(p.at(0, 0, 0, 0) > p.at(0, 0, 0, 2));
  CHECK(p.at(0, 0, 0, 1) >= 0.0);
}

TEST_CASE("backward without forward refuses") {
  Conv2d conv("c.w", 3, 3, 2, 2);
  Tensor dy(1, 4, 4, 2);
  CHECK_THROWS_WITH_AS(conv.backward(dy), "backward without forward", UsageError);

  ReLU relu;
  CHECK_THROWS_WITH_AS(relu.backward(dy), "backward without forward", UsageError);
}

TEST_CASE("inference does not arm the backward cache") {
  ReLU relu;
  Tensor x = random_tensor(1, 2, 2, 1, 3);
  relu.forward(x, Mode::Infer, nullptr);
  CHECK_THROWS_AS(relu.backward(x), UsageError);
}

TEST_CASE("every layer passes finite-difference checks on five seeds") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    for (const SuiteLine& line : layer_suite(seed, 1e-4)) {
      CAPTURE(line.name);
      CAPTURE(seed);
      CHECK(line.ok);
      CHECK(line.result.checks > 0);
    }
  }
}

TEST_CASE("shape conflicts are reported, not computed") {
  Conv2d conv("c.w", 3, 3, 4, 8);
  Tensor wrong(1, 5, 5, 3);
  CHECK_THROWS_WITH_AS(conv.forward(wrong, Mode::Infer, nullptr),
                       "layer/input shape conflict", UsageError);

  Dense fc("fc", 16, 10);
  Tensor not_flat(1, 2, 2, 16);
  CHECK_THROWS_AS(fc.forward(not_flat, Mode::Infer, nullptr), UsageError);
}
