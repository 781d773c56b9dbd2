#include "lcasc/quant.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lcasc/binio.hpp"
#include "lcasc/errors.hpp"

namespace lcasc {

QuantizedTensor quantize_tensor(const std::string& name,
                                const std::vector<int>& dims,
                                const std::vector<double>& w) {
  double peak = 0.0;
  for (double x : w) {
    if (!std::isfinite(x)) throw DataError("quantize: non-finite weight in " + name);
    peak = std::max(peak, std::abs(x));
  }
  QuantizedTensor qt;
  qt.name = name;
  qt.dims = dims;
  /* The stored f32 scale is also the one used to quantize, so the
   * half-step error bound holds against the file contents exactly. */
  qt.scale = peak == 0.0 ? 1.0f : float(peak / 127.0);
  qt.q.resize(w.size());
  double s = double(qt.scale);
  for (size_t i = 0; i < w.size(); ++i) {
    double q = std::round(w[i] / s);
    qt.q[i] = int8_t(std::clamp(q, -127.0, 127.0));
  }
  return qt;
}

std::vector<double> dequantize(const QuantizedTensor& qt) {
  std::vector<double> out(qt.q.size());
  for (size_t i = 0; i < qt.q.size(); ++i) {
    out[i] = double(qt.scale) * double(qt.q[i]);
  }
  return out;
}

size_t ModelFile::Entry::count() const {
  size_t n = 1;
  for (int d : dims) n *= size_t(d);
  return n;
}

const ModelFile::Entry* ModelFile::find(const std::string& name) const {
  for (const Entry& e : tensors) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

ModelFile snapshot_f32(Network& net) {
  ModelFile file;
  file.id = net.spec().id;
  file.decomposed = net.spec().decomposed;
  for (const Param* p : net.params()) {
    ModelFile::Entry e;
    e.name = p->name;
    e.dtype = 0;
    e.dims = p->dims;
    e.f.reserve(p->v.size());
    for (double x : p->v) e.f.push_back(float(x));
    file.tensors.push_back(std::move(e));
  }
  return file;
}

namespace {

bool is_stat_tensor(const std::string& name) {
  return name.size() > 2 && name.rfind("bn", 0) == 0 &&
         (name.compare(name.size() - 2, 2, ".m") == 0 ||
          name.compare(name.size() - 2, 2, ".v") == 0);
}

std::vector<double> widen(const std::vector<float>& f) {
  return {f.begin(), f.end()};
}

}  // namespace

ModelFile quantize_model(const ModelFile& f32, double bn_eps) {
  for (const ModelFile::Entry& e : f32.tensors) {
    if (e.dtype != 0) throw DataError("quantize_model: input is already quantized");
  }

  ModelFile out;
  out.id = f32.id;
  out.decomposed = f32.decomposed;

  for (const ModelFile::Entry& e : f32.tensors) {
    if (is_stat_tensor(e.name)) continue;  /* folded below */

    std::vector<double> values = widen(e.f);
    bool is_bn_gain = e.name.rfind("bn", 0) == 0 &&
                      e.name.compare(e.name.size() - 2, 2, ".g") == 0;
    bool is_bn_bias = e.name.rfind("bn", 0) == 0 &&
                      e.name.compare(e.name.size() - 2, 2, ".b") == 0;
    if (is_bn_gain || is_bn_bias) {
      std::string prefix = e.name.substr(0, e.name.size() - 2);
      const ModelFile::Entry* mean = f32.find(prefix + ".m");
      const ModelFile::Entry* var = f32.find(prefix + ".v");
      const ModelFile::Entry* gain = f32.find(prefix + ".g");
      if (mean == nullptr || var == nullptr || gain == nullptr ||
          mean->count() != values.size() || var->count() != values.size()) {
        throw DataError("quantize_model: incomplete batchnorm group " + prefix);
      }
      for (size_t i = 0; i < values.size(); ++i) {
        double inv = 1.0 / std::sqrt(double(var->f[i]) + bn_eps);
        if (is_bn_gain) {
          values[i] = double(gain->f[i]) * inv;
        } else {
          values[i] -= double(gain->f[i]) * double(mean->f[i]) * inv;
        }
      }
    }

    QuantizedTensor qt = quantize_tensor(e.name, e.dims, values);
    ModelFile::Entry packed;
    packed.name = qt.name;
    packed.dtype = 1;
    packed.dims = qt.dims;
    packed.q = std::move(qt.q);
    packed.scale = qt.scale;
    out.tensors.push_back(std::move(packed));
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'L', 'C', 'A', 'S'};
constexpr uint8_t kVersion = 1;

}  // namespace

std::string serialize(const ModelFile& model) {
  if (model.tensors.size() > 0xFFFF) throw UsageError("too many tensors");
  std::string buf;
  buf.append(kMagic, 4);
  binio::put_u8(buf, kVersion);
  binio::put_u8(buf, uint8_t(model.id));
  binio::put_u8(buf, model.decomposed ? 1 : 0);
  binio::put_u16(buf, uint16_t(model.tensors.size()));
  for (const ModelFile::Entry& e : model.tensors) {
    if (e.name.empty() || e.name.size() > 255) {
      throw UsageError("tensor name length out of range: " + e.name);
    }
    if (e.dims.size() > 255) throw UsageError("tensor rank out of range");
    binio::put_u8(buf, uint8_t(e.name.size()));
    buf.append(e.name);
    binio::put_u8(buf, e.dtype);
    binio::put_u8(buf, uint8_t(e.dims.size()));
    for (int d : e.dims) binio::put_u32(buf, uint32_t(d));
    if (e.dtype == 1) {
      binio::put_f32(buf, e.scale);
      for (int8_t q : e.q) binio::put_i8(buf, q);
    } else {
      for (float f : e.f) binio::put_f32(buf, f);
    }
  }
  binio::put_u32(buf, binio::crc32(buf, 0, buf.size()));
  return buf;
}

ModelFile deserialize(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw DataError("bad magic at offset 0, expected LCAS");
  }
  if (bytes.size() < 13) throw DataError("file truncated at offset 4");

  size_t crc_off = bytes.size() - 4;
  {
    size_t off = crc_off;
    uint32_t stored = binio::get_u32(bytes, off);
    uint32_t actual = binio::crc32(bytes, 0, crc_off);
    if (stored != actual) {
      throw DataError("crc mismatch at offset " + std::to_string(crc_off));
    }
  }

  size_t off = 4;
  uint8_t version = binio::get_u8(bytes, off);
  if (version != kVersion) {
    throw DataError("unsupported version " + std::to_string(version) +
                    " at offset 4");
  }
  uint8_t id = binio::get_u8(bytes, off);
  if (id < 1 || id > 3) {
    throw DataError("unknown model id " + std::to_string(id) + " at offset 5");
  }
  uint8_t decomposed = binio::get_u8(bytes, off);
  if (decomposed > 1) {
    throw DataError("invalid decomposed flag at offset 6");
  }
  uint16_t tensor_count = binio::get_u16(bytes, off);

  ModelFile model;
  model.id = ModelId(id);
  model.decomposed = decomposed == 1;
  for (uint16_t i = 0; i < tensor_count; ++i) {
    size_t entry_off = off;
    uint8_t name_len = binio::get_u8(bytes, off);
    if (name_len == 0) {
      throw DataError("empty tensor name at offset " + std::to_string(entry_off));
    }
    if (off + name_len > crc_off) {
      throw DataError("file truncated at offset " + std::to_string(off));
    }
    ModelFile::Entry e;
    e.name = bytes.substr(off, name_len);
    off += name_len;
    e.dtype = binio::get_u8(bytes, off);
    if (e.dtype > 1) {
      throw DataError("unknown dtype " + std::to_string(e.dtype) +
                      " at offset " + std::to_string(off - 1));
    }
    uint8_t rank = binio::get_u8(bytes, off);
    size_t count = 1;
    for (uint8_t r = 0; r < rank; ++r) {
      uint32_t d = binio::get_u32(bytes, off);
      if (d == 0 || d > (1u << 24)) {
        throw DataError("implausible dimension at offset " + std::to_string(off - 4));
      }
      e.dims.push_back(int(d));
      count *= d;
    }
    if (e.dtype == 1) {
      e.scale = binio::get_f32(bytes, off);
      if (!(e.scale > 0.0f) || !std::isfinite(e.scale)) {
        throw DataError("invalid scale at offset " + std::to_string(off - 4));
      }
      if (off + count > crc_off) {
        throw DataError("file truncated at offset " + std::to_string(off));
      }
      e.q.resize(count);
      for (size_t j = 0; j < count; ++j) e.q[j] = binio::get_i8(bytes, off);
    } else {
      if (off + count * 4 > crc_off) {
        throw DataError("file truncated at offset " + std::to_string(off));
      }
      e.f.resize(count);
      for (size_t j = 0; j < count; ++j) e.f[j] = binio::get_f32(bytes, off);
    }
    model.tensors.push_back(std::move(e));
  }
  if (off != crc_off) {
    throw DataError("trailing bytes at offset " + std::to_string(off));
  }
  return model;
}

void save_model(const std::string& path, const ModelFile& model) {
  binio::write_file(path, serialize(model));
}

ModelFile load_model(const std::string& path) {
  try {
    return deserialize(binio::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Network instantiate(const ModelFile& model) {
  Network net(make_model_spec(model.id, model.decomposed), 0);

  std::map<std::string, Param*> by_name;
  for (Param* p : net.params()) by_name[p->name] = p;

  std::set<std::string> covered;
  bool folded = false;
  for (const ModelFile::Entry& e : model.tensors) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) {
      throw DataError("unknown tensor '" + e.name + "' for model " +
                      model_name(model.id));
    }
    Param* p = it->second;
    if (e.dims != p->dims) {
      throw DataError("tensor '" + e.name + "' has mismatched shape");
    }
    if (e.dtype == 1) {
      QuantizedTensor qt;
      qt.name = e.name;
      qt.dims = e.dims;
      qt.q = e.q;
      qt.scale = e.scale;
      p->v = dequantize(qt);
      if (e.name.rfind("bn", 0) == 0) folded = true;
    } else {
      if (e.f.size() != p->count()) {
        throw DataError("tensor '" + e.name + "' has mismatched value count");
      }
      for (size_t i = 0; i < e.f.size(); ++i) p->v[i] = double(e.f[i]);
    }
    covered.insert(e.name);
  }

  for (Param* p : net.params()) {
    if (covered.count(p->name) != 0) continue;
    if (folded && is_stat_tensor(p->name)) {
      /* The folded gain/bias already include the statistics; identity
       * stats make the BN affine map reproduce them: with var = 1 - eps,
       * 1/sqrt(var + eps) is exactly 1. */
      bool is_var = p->name.compare(p->name.size() - 2, 2, ".v") == 0;
      std::fill(p->v.begin(), p->v.end(), is_var ? 1.0 - 1e-5 : 0.0);
      continue;
    }
    throw DataError("tensor set does not cover parameter '" + p->name + "'");
  }
  return net;
}

SizeReport file_size_report(const ModelFile& model) {
  SizeReport report;
  for (const ModelFile::Entry& e : model.tensors) {
    SizeReport::Row row;
    row.tensor = e.name;
    row.count = e.count();
    row.prec = e.dtype == 1 ? Precision::I8 : Precision::F32;
    row.bytes = e.dtype == 1 ? row.count + 4 : row.count * 4;
    report.total_bytes += row.bytes;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace lcasc
