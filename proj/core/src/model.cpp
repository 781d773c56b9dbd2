#include "lcasc/model.hpp"

#include <algorithm>
#include <cmath>

#include "lcasc/errors.hpp"

namespace lcasc {

const char* model_name(ModelId id) {
  switch (id) {
    case ModelId::M1: return "m1";
    case ModelId::M2: return "m2";
    case ModelId::M3: return "m3";
  }
  return "?";
}

ModelId model_id_from_name(const std::string& name) {
  if (name == "m1") return ModelId::M1;
  if (name == "m2") return ModelId::M2;
  if (name == "m3") return ModelId::M3;
  throw UsageError("unknown model id '" + name + "'");
}

int ModelSpec::conv_layer_count() const {
  int count = 0;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerSpec::Kind::Conv3x3 ||
        l.kind == LayerSpec::Kind::DecomposedConv) {
      ++count;
    }
  }
  return count;
}

namespace {

enum class RowPool { None, Avg, Global };

struct ConvRow {
  int out_ch;
  RowPool pool;
};

std::vector<ConvRow> conv_rows(ModelId id) {
  switch (id) {
    case ModelId::M1:
      return {{16, RowPool::Avg},
              {32, RowPool::Avg},
              {64, RowPool::Avg},
              {128, RowPool::Global}};
    case ModelId::M2:
      return {{16, RowPool::None},
              {16, RowPool::Avg},
              {32, RowPool::None},
              {32, RowPool::Avg},
              {64, RowPool::Avg},
              {64, RowPool::Global}};
    case ModelId::M3:
      return {{16, RowPool::None},
              {16, RowPool::Avg},
              {32, RowPool::None},
              {32, RowPool::Avg},
              {64, RowPool::None},
              {64, RowPool::Avg},
              {128, RowPool::None},
              {128, RowPool::Global}};
  }
  throw UsageError("unknown model id");
}

constexpr double kDropoutRate = 0.10;

}  // namespace

ModelSpec make_model_spec(ModelId id, bool decomposed) {
  ModelSpec spec;
  spec.id = id;
  spec.decomposed = decomposed;
  spec.num_classes = 10;

  int in_ch = 3;
  for (const ConvRow& row : conv_rows(id)) {
    LayerSpec conv;
    conv.kind = decomposed ? LayerSpec::Kind::DecomposedConv
                           : LayerSpec::Kind::Conv3x3;
    conv.in_ch = in_ch;
    conv.out_ch = row.out_ch;
    spec.layers.push_back(conv);
    spec.layers.push_back({LayerSpec::Kind::ReLU, 0, 0, 0.0});
    spec.layers.push_back({LayerSpec::Kind::BatchNorm, row.out_ch, 0, 0.0});
    if (row.pool == RowPool::Avg) {
      spec.layers.push_back({LayerSpec::Kind::AvgPool2x2, 0, 0, 0.0});
    } else if (row.pool == RowPool::Global) {
      spec.layers.push_back({LayerSpec::Kind::GlobalAvgPool, 0, 0, 0.0});
    }
    spec.layers.push_back({LayerSpec::Kind::Dropout, 0, 0, kDropoutRate});
    in_ch = row.out_ch;
  }
  spec.layers.push_back({LayerSpec::Kind::Dense, in_ch, spec.num_classes, 0.0});
  spec.layers.push_back({LayerSpec::Kind::Softmax, 0, 0, 0.0});
  return spec;
}

namespace {

Shape3 step_shape(const LayerSpec& layer, Shape3 s) {
  switch (layer.kind) {
    case LayerSpec::Kind::Conv3x3:
    case LayerSpec::Kind::DecomposedConv:
      if (s.c != layer.in_ch) throw UsageError("layer/input shape conflict");
      return {s.h, s.w, layer.out_ch};
    case LayerSpec::Kind::BatchNorm:
      if (s.c != layer.in_ch) throw UsageError("layer/input shape conflict");
      return s;
    case LayerSpec::Kind::ReLU:
    case LayerSpec::Kind::Dropout:
    case LayerSpec::Kind::Softmax:
      return s;
    case LayerSpec::Kind::AvgPool2x2:
      if (s.h % 2 != 0 || s.w % 2 != 0) throw UsageError("layer/input shape conflict");
      return {s.h / 2, s.w / 2, s.c};
    case LayerSpec::Kind::GlobalAvgPool:
      return {1, 1, s.c};
    case LayerSpec::Kind::Dense:
      if (s.h != 1 || s.w != 1 || s.c != layer.in_ch) {
        throw UsageError("layer/input shape conflict");
      }
      return {1, 1, layer.out_ch};
  }
  throw UsageError("unknown layer kind");
}

}  // namespace

std::vector<Shape3> trace_shapes(const ModelSpec& spec, Shape3 input) {
  std::vector<Shape3> out;
  Shape3 s = input;
  for (const LayerSpec& layer : spec.layers) {
    s = step_shape(layer, s);
    out.push_back(s);
  }
  return out;
}

std::vector<Shape3> trace_row_outputs(const ModelSpec& spec, Shape3 input) {
  std::vector<Shape3> out;
  Shape3 s = input;
  for (const LayerSpec& layer : spec.layers) {
    s = step_shape(layer, s);
    if (layer.kind == LayerSpec::Kind::Dropout) out.push_back(s);
  }
  return out;
}

Network::Network(const ModelSpec& spec, uint64_t init_seed) : spec_(spec) {
  int conv_idx = 0, bn_idx = 0;
  for (const LayerSpec& layer : spec.layers) {
    switch (layer.kind) {
      case LayerSpec::Kind::Conv3x3:
        ++conv_idx;
        layers_.push_back(std::make_unique<Conv2d>(
            "c" + std::to_string(conv_idx) + ".w", 3, 3, layer.in_ch, layer.out_ch));
        break;
      case LayerSpec::Kind::DecomposedConv: {
        ++conv_idx;
        std::string name = "c" + std::to_string(conv_idx);
        if (auto sub = decompose(layer)) {
          layers_.push_back(std::make_unique<DecomposedConv>(name, *sub));
        } else {
          layers_.push_back(std::make_unique<Conv2d>(name + ".w", 3, 3,
                                                     layer.in_ch, layer.out_ch));
        }
        break;
      }
      case LayerSpec::Kind::BatchNorm:
        ++bn_idx;
        layers_.push_back(std::make_unique<BatchNorm>(
            "bn" + std::to_string(bn_idx), layer.in_ch));
        break;
      case LayerSpec::Kind::ReLU:
        layers_.push_back(std::make_unique<ReLU>());
        break;
      case LayerSpec::Kind::AvgPool2x2:
        layers_.push_back(std::make_unique<AvgPool2x2>());
        break;
      case LayerSpec::Kind::GlobalAvgPool:
        layers_.push_back(std::make_unique<GlobalAvgPool>());
        break;
      case LayerSpec::Kind::Dropout:
        layers_.push_back(std::make_unique<Dropout>(layer.rate));
        break;
      case LayerSpec::Kind::Dense:
        layers_.push_back(std::make_unique<Dense>("fc", layer.in_ch, layer.out_ch));
        break;
      case LayerSpec::Kind::Softmax:
        layers_.push_back(std::make_unique<SoftmaxLayer>());
        break;
    }
  }

  Rng rng(init_seed);
  for (Param* p : params()) {
    if (p->name.size() < 2 || p->name.compare(p->name.size() - 2, 2, ".w") != 0) {
      continue;
    }
    size_t fan_in = 0;
    if (p->dims.size() == 4) {
      fan_in = size_t(p->dims[0]) * p->dims[1] * p->dims[2];
    } else if (p->dims.size() == 2) {
      fan_in = size_t(p->dims[0]);
    }
    if (fan_in == 0) continue;
    double bound = std::sqrt(6.0 / double(fan_in));
    for (double& w : p->v) w = rng.uniform(-bound, bound);
  }
}

Tensor Network::forward(const Tensor& x, Mode mode, Rng* rng) {
  Tensor t = x;
  for (auto& layer : layers_) t = layer->forward(t, mode, rng);
  return t;
}

Tensor Network::forward_logits(const Tensor& x, Mode mode, Rng* rng) {
  Tensor t = x;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    t = layers_[i]->forward(t, mode, rng);
  }
  return t;
}

Tensor Network::backward_from_logits(const Tensor& dlogits) {
  Tensor d = dlogits;
  for (size_t i = layers_.size() - 1; i-- > 0;) {
    d = layers_[i]->backward(d);
  }
  return d;
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_) {
    for (Param* p : layer->params()) out.push_back(p);
  }
  return out;
}

std::vector<Param*> Network::trainable_params() {
  std::vector<Param*> out;
  for (Param* p : params()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

void Network::zero_grad() {
  for (auto& layer : layers_) layer->zero_grad();
}

SizeReport size_report(const std::vector<Param*>& params, Precision weight_prec) {
  SizeReport report;
  for (const Param* p : params) {
    if (weight_prec == Precision::I8 && !p->trainable) continue;
    SizeReport::Row row;
    row.tensor = p->name;
    row.count = p->count();
    if (weight_prec == Precision::I8 && p->trainable) {
      row.prec = Precision::I8;
      row.bytes = row.count + 4;  /* packed values plus the scale */
    } else {
      row.prec = Precision::F32;
      row.bytes = row.count * 4;
    }
    report.total_bytes += row.bytes;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace lcasc
