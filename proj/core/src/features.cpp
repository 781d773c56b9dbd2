#include "lcasc/features.hpp"

#include "lcasc/binio.hpp"
#include "lcasc/errors.hpp"

namespace lcasc {

namespace {
constexpr char kMagic[4] = {'L', 'C', 'F', 'T'};
constexpr uint8_t kVersion = 1;
}  // namespace

std::string encode_lcft(const Tensor& spec, FilterbankKind kind) {
  if (spec.n != 1) throw UsageError("encode_lcft: expected a spectrogram tensor");
  std::string buf;
  buf.append(kMagic, 4);
  binio::put_u8(buf, kVersion);
  binio::put_u8(buf, uint8_t(kind));
  binio::put_u32(buf, uint32_t(spec.h));
  binio::put_u32(buf, uint32_t(spec.w));
  binio::put_u32(buf, uint32_t(spec.c));
  /* Memory order is already freq-major, then time, then channel. */
  for (double x : spec.v) binio::put_f32(buf, float(x));
  return buf;
}

LcftFile decode_lcft(const std::string& bytes) {
  size_t off = 0;
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw DataError("bad magic at offset 0, expected LCFT");
  }
  off = 4;
  uint8_t version = binio::get_u8(bytes, off);
  if (version != kVersion) {
    throw DataError("unsupported LCFT version " + std::to_string(version) +
                    " at offset 4");
  }
  uint8_t kind = binio::get_u8(bytes, off);
  if (kind > 2) {
    throw DataError("unknown filterbank kind " + std::to_string(kind) +
                    " at offset 5");
  }
  uint32_t freq = binio::get_u32(bytes, off);
  uint32_t time = binio::get_u32(bytes, off);
  uint32_t chan = binio::get_u32(bytes, off);
  uint64_t count = uint64_t(freq) * time * chan;
  if (count == 0 || count > (1u << 28)) {
    throw DataError("implausible LCFT dimensions at offset 6");
  }
  if (bytes.size() != off + count * 4) {
    throw DataError("value payload size mismatch at offset " + std::to_string(off));
  }
  LcftFile out;
  out.kind = FilterbankKind(kind);
  out.spec = Tensor::spectrogram(int(freq), int(time), int(chan));
  for (uint64_t i = 0; i < count; ++i) {
    out.spec.v[i] = double(binio::get_f32(bytes, off));
  }
  return out;
}

void write_lcft(const std::string& path, const Tensor& spec, FilterbankKind kind) {
  binio::write_file(path, encode_lcft(spec, kind));
}

LcftFile read_lcft(const std::string& path) {
  try {
    return decode_lcft(binio::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace lcasc
