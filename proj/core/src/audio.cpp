#include "lcasc/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lcasc/binio.hpp"
#include "lcasc/errors.hpp"

namespace lcasc {

namespace {

uint32_t read_tag(const std::string& buf, size_t& off) {
  return binio::get_u32(buf, off);
}

constexpr uint32_t tag(char a, char b, char c, char d) {
  return uint32_t(uint8_t(a)) | uint32_t(uint8_t(b)) << 8 |
         uint32_t(uint8_t(c)) << 16 | uint32_t(uint8_t(d)) << 24;
}

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::string buf = binio::read_file(path);
  size_t off = 0;
  if (read_tag(buf, off) != tag('R', 'I', 'F', 'F')) {
    throw DataError(path + ": missing RIFF header");
  }
  binio::get_u32(buf, off);  /* riff payload size, unused */
  if (read_tag(buf, off) != tag('W', 'A', 'V', 'E')) {
    throw DataError(path + ": not a WAVE file");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  AudioClip clip;
  bool have_data = false;

  while (off + 8 <= buf.size()) {
    uint32_t id = read_tag(buf, off);
    uint32_t len = binio::get_u32(buf, off);
    if (off + len > buf.size()) {
      throw DataError(path + ": truncated chunk at offset " + std::to_string(off));
    }
    if (id == tag('f', 'm', 't', ' ')) {
      size_t p = off;
      format = binio::get_u16(buf, p);
      channels = binio::get_u16(buf, p);
      rate = binio::get_u32(buf, p);
      binio::get_u32(buf, p);  /* byte rate */
      binio::get_u16(buf, p);  /* block align */
      bits = binio::get_u16(buf, p);
      have_fmt = true;
    } else if (id == tag('d', 'a', 't', 'a')) {
      if (!have_fmt) throw DataError(path + ": data chunk before fmt chunk");
      if (format != 1) throw DataError(path + ": not PCM (format " + std::to_string(format) + ")");
      if (channels != 1) throw DataError(path + ": expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw DataError(path + ": expected 16-bit samples, got " + std::to_string(bits));
      size_t count = len / 2;
      clip.samples.resize(count);
      size_t p = off;
      for (size_t i = 0; i < count; ++i) {
        int16_t s = int16_t(binio::get_u16(buf, p));
        clip.samples[i] = double(s) / 32768.0;
      }
      have_data = true;
    }
    off += len + (len & 1);  /* chunks are word aligned */
  }

  if (!have_data) throw DataError(path + ": no data chunk");
  clip.sample_rate = int(rate);
  return clip;
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate) {
  if (sample_rate <= 0) throw UsageError("write_wav: sample_rate must be positive");
  std::string buf;
  uint32_t data_len = uint32_t(samples.size() * 2);
  binio::put_u32(buf, tag('R', 'I', 'F', 'F'));
  binio::put_u32(buf, 36 + data_len);
  binio::put_u32(buf, tag('W', 'A', 'V', 'E'));
  binio::put_u32(buf, tag('f', 'm', 't', ' '));
  binio::put_u32(buf, 16);
  binio::put_u16(buf, 1);                          /* PCM */
  binio::put_u16(buf, 1);                          /* mono */
  binio::put_u32(buf, uint32_t(sample_rate));
  binio::put_u32(buf, uint32_t(sample_rate) * 2);  /* byte rate */
  binio::put_u16(buf, 2);                          /* block align */
  binio::put_u16(buf, 16);
  binio::put_u32(buf, tag('d', 'a', 't', 'a'));
  binio::put_u32(buf, data_len);
  for (double x : samples) {
    double scaled = std::clamp(x, -1.0, 32767.0 / 32768.0) * 32768.0;
    auto s = int16_t(std::lround(std::clamp(scaled, -32768.0, 32767.0)));
    binio::put_u16(buf, uint16_t(s));
  }
  binio::write_file(path, buf);
}

}  // namespace lcasc
