#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lcasc/nn.hpp"

namespace lcasc {

enum class ModelId : uint8_t { M1 = 1, M2 = 2, M3 = 3 };

const char* model_name(ModelId id);
ModelId model_id_from_name(const std::string& name);  /* "m1"|"m2"|"m3" */

struct ModelSpec {
  ModelId id = ModelId::M1;
  bool decomposed = false;
  int num_classes = 10;
  std::vector<LayerSpec> layers;

  int conv_layer_count() const;
};

/* Layer sequences for the three model families. Every conv row is
 * Conv-ReLU-BN-[pool]-Dropout(0.10); the chain ends Dense(->10), Softmax.
 *   M1: convs 16,32,64,128; 2x2 pool after the first three rows, global pool
 *       on the last.
 *   M2: convs 16,16,32,32,64,64; 2x2 pool on rows 2, 4, 5; global pool row 6.
 *   M3: convs 16,16,32,32,64,64,128,128; 2x2 pool on rows 2, 4, 6 (the rows
 *       where the spatial size actually halves); global pool row 8.
 * With decomposed=true each conv whose input channels divide by 4 becomes the
 * four-sub-convolution chain; the first conv (3 channels in) stays standard. */
ModelSpec make_model_spec(ModelId id, bool decomposed);

struct Shape3 {
  int h = 0, w = 0, c = 0;
  bool operator==(const Shape3&) const = default;
};

/* Shape after every layer of the sequence, starting from input. */
std::vector<Shape3> trace_shapes(const ModelSpec& spec, Shape3 input);

/* Shape at the end of each conv row (after its pool and dropout), i.e. the
 * printed output column of the model tables. */
std::vector<Shape3> trace_row_outputs(const ModelSpec& spec, Shape3 input);

/* A built model: layers plus initialized parameters. Conv and dense weights
 * are He-uniform from the seed; BN starts at gamma=1, beta=0, mean=0, var=1. */
class Network {
 public:
  Network(const ModelSpec& spec, uint64_t init_seed);

  const ModelSpec& spec() const { return spec_; }

  /* Full chain including the final softmax. */
  Tensor forward(const Tensor& x, Mode mode, Rng* rng = nullptr);

  /* Chain up to (excluding) the final softmax. */
  Tensor forward_logits(const Tensor& x, Mode mode, Rng* rng = nullptr);

  /* Backpropagates a gradient with respect to the logits through everything
   * below the softmax. Parameter gradients accumulate into Param::g. */
  Tensor backward_from_logits(const Tensor& dlogits);

  std::vector<Param*> params();
  std::vector<Param*> trainable_params();
  void zero_grad();

  size_t layer_count() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

enum class Precision : uint8_t { F32 = 0, I8 = 1 };

/* Storage accounting. int8 tensors cost 1 byte per value plus 4 for the
 * scale; fp32 tensors cost 4 per value. KB means 1000 bytes throughout. */
struct SizeReport {
  struct Row {
    std::string tensor;
    size_t count = 0;
    Precision prec = Precision::F32;
    size_t bytes = 0;
  };
  std::vector<Row> rows;
  size_t total_bytes = 0;
  double total_kb() const { return double(total_bytes) / 1000.0; }
};

/* Accounting over a parameter set. weight_prec = I8 models the quantized
 * artifact: trainable tensors packed to int8, running stats folded away.
 * F32 models the checkpoint: every tensor at 4 bytes per value. */
SizeReport size_report(const std::vector<Param*>& params, Precision weight_prec);

}  // namespace lcasc
