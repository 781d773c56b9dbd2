#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace lcasc::binio {

/* Little-endian primitives over a growable byte buffer. All multi-byte values
 * are composed bytewise so the encoding does not depend on host endianness. */

void put_u8(std::string& buf, uint8_t x);
void put_u16(std::string& buf, uint16_t x);
void put_u32(std::string& buf, uint32_t x);
void put_f32(std::string& buf, float x);
void put_i8(std::string& buf, int8_t x);

/* Readers take the current offset by reference and advance it. They throw
 * DataError mentioning the offset when the buffer is too short. */
uint8_t get_u8(const std::string& buf, size_t& off);
uint16_t get_u16(const std::string& buf, size_t& off);
uint32_t get_u32(const std::string& buf, size_t& off);
float get_f32(const std::string& buf, size_t& off);
int8_t get_i8(const std::string& buf, size_t& off);

/* IEEE CRC-32 (polynomial 0xEDB88320, init/final xor 0xFFFFFFFF). */
uint32_t crc32(const std::string& buf, size_t off, size_t len);

/* Whole-file helpers. Throw DataError on open or I/O failure. */
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace lcasc::binio
