#include "lcasc/binio.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "lcasc/errors.hpp"

namespace lcasc::binio {

void put_u8(std::string& buf, uint8_t x) { buf.push_back(char(x)); }

void put_u16(std::string& buf, uint16_t x) {
  buf.push_back(char(x & 0xff));
  buf.push_back(char((x >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t x) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((x >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float x) {
  uint32_t bits;
  static_assert(sizeof bits == sizeof x);
  std::memcpy(&bits, &x, sizeof bits);
  put_u32(buf, bits);
}

void put_i8(std::string& buf, int8_t x) { buf.push_back(char(x)); }

namespace {

void need(const std::string& buf, size_t off, size_t n) {
  if (off + n > buf.size()) {
    throw DataError("unexpected end of data at offset " + std::to_string(off));
  }
}

}  // namespace

uint8_t get_u8(const std::string& buf, size_t& off) {
  need(buf, off, 1);
  return uint8_t(buf[off++]);
}

uint16_t get_u16(const std::string& buf, size_t& off) {
  need(buf, off, 2);
  uint16_t x = uint16_t(uint8_t(buf[off])) | uint16_t(uint8_t(buf[off + 1])) << 8;
  off += 2;
  return x;
}

uint32_t get_u32(const std::string& buf, size_t& off) {
  need(buf, off, 4);
  uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= uint32_t(uint8_t(buf[off + i])) << (8 * i);
  off += 4;
  return x;
}

float get_f32(const std::string& buf, size_t& off) {
  uint32_t bits = get_u32(buf, off);
  float x;
  std::memcpy(&x, &bits, sizeof x);
  return x;
}

int8_t get_i8(const std::string& buf, size_t& off) {
  need(buf, off, 1);
  return int8_t(buf[off++]);
}

uint32_t crc32(const std::string& buf, size_t off, size_t len) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ uint8_t(buf[off + i])) & 0xff] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (f.bad()) throw DataError("read failed: " + path);
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path + " for writing");
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace lcasc::binio
