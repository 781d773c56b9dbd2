#pragma once

#include <string>
#include <vector>

namespace lcasc {

/* Mono audio in [-1, 1), decoded from 16-bit PCM by dividing by 32768. */
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
};

/* Reads a RIFF/WAVE file. Only PCM, 16-bit, mono is accepted; anything else
 * is a DataError naming the offending field. */
AudioClip load_wav(const std::string& path);

/* Writes samples as PCM s16le mono, clipping to [-1, 32767/32768]. */
void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate);

}  // namespace lcasc
