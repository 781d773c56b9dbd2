#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lcasc/rng.hpp"
#include "lcasc/tensor.hpp"

namespace lcasc {

enum class Mode { Train, Infer };

/* Named value tensor with matching gradient storage. Running statistics are
 * params with trainable=false: persisted and updated, but not optimized and
 * not part of the regularized norm. */
struct Param {
  std::string name;
  std::vector<int> dims;
  std::vector<double> v;
  std::vector<double> g;
  bool trainable = true;

  Param() = default;
  Param(std::string name_, std::vector<int> dims_, bool trainable_ = true);
  size_t count() const { return v.size(); }
};

struct LayerSpec {
  enum class Kind {
    Conv3x3,
    DecomposedConv,
    BatchNorm,
    ReLU,
    AvgPool2x2,
    GlobalAvgPool,
    Dropout,
    Dense,
    Softmax,
  };
  Kind kind = Kind::ReLU;
  int in_ch = 0;   /* Conv/DecomposedConv/BatchNorm/Dense */
  int out_ch = 0;  /* Conv/DecomposedConv/Dense */
  double rate = 0.0;  /* Dropout */
};

const char* layer_kind_name(LayerSpec::Kind kind);

/* Four-sub-convolution replacement for a 3x3 conv: a 1x1 bottleneck to
 * C_in/4, a 3x1 expansion to C_in/2, a 1x3 reduction back to C_in/4, and a
 * 1x1 projection to C_out. No biases or nonlinearities in between; total
 * weight count is C_in^2 + C_in*C_out/4. */
struct DecomposedConvSpec {
  struct Sub {
    int kh = 0, kw = 0, in_ch = 0, out_ch = 0;
    size_t weight_count() const {
      return size_t(kh) * kw * in_ch * out_ch;
    }
  };
  std::array<Sub, 4> subs;

  size_t weight_count() const;
};

/* Returns nullopt when in_ch is not divisible by 4; such layers stay
 * standard 3x3 convolutions. */
std::optional<DecomposedConvSpec> decompose(const LayerSpec& parent);

/* Stored-value counts per layer, split into the tensors the quantizer packs
 * to int8 (conv kernels, dense weight and bias, BN gain/bias) and the fp32
 * leftovers (BN running mean/variance, kept only in fp32 checkpoints). */
struct ParamCount {
  struct Row {
    std::string layer;
    size_t quantizable = 0;
    size_t fp32_small = 0;
  };
  std::vector<Row> rows;
  size_t quantizable = 0;
  size_t fp32_small = 0;
  size_t total() const { return quantizable + fp32_small; }
};

ParamCount param_count(const std::vector<LayerSpec>& seq);

/* Convolution kernels shared by Conv2d and DecomposedConv. Kernel layout is
 * [kh][kw][cin][cout] row-major; stride 1, zero same-padding, no bias. */
void conv2d_forward(const Tensor& x, const std::vector<double>& kernel,
                    int kh, int kw, int cin, int cout, Tensor& y);
void conv2d_backward(const Tensor& x, const std::vector<double>& kernel,
                     int kh, int kw, int cin, int cout, const Tensor& dy,
                     Tensor& dx, std::vector<double>& dkernel);

class Layer {
 public:
  virtual ~Layer() = default;
  virtual const char* kind_name() const = 0;

  /* Train mode caches what backward needs; infer mode caches nothing and is
   * read-only over parameters, so concurrent inference is safe. rng is only
   * consulted by Dropout in train mode. */
  virtual Tensor forward(const Tensor& x, Mode mode, Rng* rng) = 0;

  /* Consumes the cache of the matching train-mode forward; parameter
   * gradients accumulate into Param::g. */
  virtual Tensor backward(const Tensor& dy) = 0;

  virtual std::vector<Param*> params() { return {}; }
  void zero_grad();
};

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int kh, int kw, int in_ch, int out_ch);
  const char* kind_name() const override { return "conv"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&w_}; }
  Param& weights() { return w_; }

 private:
  int kh_, kw_, in_ch_, out_ch_;
  Param w_;
  Tensor cached_x_;
  bool has_cache_ = false;
};

class DecomposedConv : public Layer {
 public:
  DecomposedConv(const std::string& name, const DecomposedConvSpec& spec);
  const char* kind_name() const override { return "decomposed_conv"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override;

 private:
  std::array<std::unique_ptr<Conv2d>, 4> subs_;
};

class BatchNorm : public Layer {
 public:
  explicit BatchNorm(std::string name, int channels, double eps = 1e-5,
                     double momentum = 0.9);
  const char* kind_name() const override { return "batchnorm"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override {
    return {&gamma_, &beta_, &mean_, &var_};
  }
  double eps() const { return eps_; }

 private:
  int channels_;
  double eps_, momentum_;
  Param gamma_, beta_, mean_, var_;
  Tensor cached_xhat_;
  std::vector<double> cached_inv_std_;
  bool has_cache_ = false;
};

class ReLU : public Layer {
 public:
  const char* kind_name() const override { return "relu"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor cached_x_;
  bool has_cache_ = false;
};

class AvgPool2x2 : public Layer {
 public:
  const char* kind_name() const override { return "avgpool"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int in_h_ = 0, in_w_ = 0;
  bool has_cache_ = false;
};

class GlobalAvgPool : public Layer {
 public:
  const char* kind_name() const override { return "gap"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int in_h_ = 0, in_w_ = 0;
  bool has_cache_ = false;
};

class Dropout : public Layer {
 public:
  explicit Dropout(double rate);
  const char* kind_name() const override { return "dropout"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;

 private:
  double rate_;
  Tensor cached_mask_;  /* already scaled by 1/(1-rate) */
  bool has_cache_ = false;
};

class Dense : public Layer {
 public:
  Dense(std::string name, int in_dim, int out_dim);
  const char* kind_name() const override { return "dense"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }

 private:
  int in_dim_, out_dim_;
  Param w_, b_;
  Tensor cached_x_;
  bool has_cache_ = false;
};

class SoftmaxLayer : public Layer {
 public:
  const char* kind_name() const override { return "softmax"; }
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor cached_y_;
  bool has_cache_ = false;
};

/* Softmax over the channel axis with max subtraction, usable standalone. */
Tensor softmax(const Tensor& logits);

}  // namespace lcasc
