#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lcasc/model.hpp"

namespace lcasc {

/* Symmetric per-tensor int8: scale = max|w|/127 (1 for an all-zero tensor),
 * values rounded half away from zero and clamped to [-127, 127]. -128 is
 * never produced, keeping dequantization sign-symmetric. */
struct QuantizedTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<int8_t> q;
  float scale = 1.0f;
};

QuantizedTensor quantize_tensor(const std::string& name,
                                const std::vector<int>& dims,
                                const std::vector<double>& w);

std::vector<double> dequantize(const QuantizedTensor& qt);

/* In-memory form of an LCAS model file. dtype 0 tensors carry fp32 values,
 * dtype 1 tensors int8 values plus a scale. */
struct ModelFile {
  struct Entry {
    std::string name;
    uint8_t dtype = 0;  /* 0 = f32, 1 = i8 */
    std::vector<int> dims;
    std::vector<float> f;
    std::vector<int8_t> q;
    float scale = 1.0f;

    size_t count() const;
  };

  ModelId id = ModelId::M1;
  bool decomposed = false;
  std::vector<Entry> tensors;

  const Entry* find(const std::string& name) const;
};

/* Full-precision checkpoint of a network: every parameter, running
 * statistics included, as f32 tensors. */
ModelFile snapshot_f32(Network& net);

/* int8 artifact. Batch-norm running statistics are folded into the gain and
 * bias first (g' = g/sqrt(v+eps), b' = b - g*m/sqrt(v+eps)), then every
 * trainable tensor is quantized. The folded file carries no running stats;
 * the loader reinstates the identity statistics they fold to. */
ModelFile quantize_model(const ModelFile& f32, double bn_eps = 1e-5);

/* LCAS byte format: magic "LCAS", u8 version=1, u8 model id, u8 decomposed,
 * u16 LE tensor count; per tensor u8 name length, name, u8 dtype, u8 rank,
 * rank u32 LE dims, f32 LE scale when int8, then raw row-major values LE;
 * trailing u32 LE CRC32 over all preceding bytes. */
std::string serialize(const ModelFile& model);
ModelFile deserialize(const std::string& bytes);

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

/* Builds the network the file describes and installs its values,
 * dequantizing int8 tensors. A folded file fills running mean 0 and running
 * variance 1-eps so inference reproduces the folded affine map. Tensors that
 * match nothing, or parameters left uncovered, are data errors. */
Network instantiate(const ModelFile& model);

/* Accounting over file contents: int8 rows cost count+4 bytes, f32 rows
 * 4*count, matching the size_report convention. */
SizeReport file_size_report(const ModelFile& model);

}  // namespace lcasc
