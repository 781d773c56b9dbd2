#pragma once

#include <string>

#include "lcasc/frontend.hpp"
#include "lcasc/tensor.hpp"

namespace lcasc {

/* LCFT: cached feature tensor on disk.
 * Layout: magic "LCFT", u8 version=1, u8 filterbank_kind, u32 LE freq,
 * u32 LE time, u32 LE chan, then freq*time*chan f32 LE values ordered
 * freq-major, then time, then channel. */

struct LcftFile {
  FilterbankKind kind = FilterbankKind::Mel;
  Tensor spec;
};

std::string encode_lcft(const Tensor& spec, FilterbankKind kind);
LcftFile decode_lcft(const std::string& bytes);

void write_lcft(const std::string& path, const Tensor& spec, FilterbankKind kind);
LcftFile read_lcft(const std::string& path);

}  // namespace lcasc
