#pragma once

#include <cstdint>
#include <string>

#include "lcasc/audio.hpp"

namespace lcasc {

/* Labeled synthetic corpus: each scene class is a fixed two-tone signature
 * plus noise, so classes are separable by any of the filterbanks and the
 * whole pipeline can run without the real dataset. */
struct SynthSpec {
  int classes = 4;          /* uses the first N scene labels, <= 10 */
  int train_per_class = 7;
  int eval_per_class = 3;
  uint64_t seed = 7;

  void validate() const;  /* throws UsageError */
};

/* One second of audio for a scene class; device shifts the gain slightly. */
AudioClip synth_clip(int scene, const std::string& device, uint64_t seed);

/* Writes audio/*.wav plus train.csv, evaluate.csv, and meta.csv (DCASE-style
 * tab-separated with filename/scene_label/identifier/source_label columns)
 * under root. Train clips rotate devices a,b,c,s1..s3; eval clips rotate
 * a,b,c,s4..s6 so unseen-device rows appear. Returns the clip count. */
int write_synth_corpus(const std::string& root, const SynthSpec& spec);

}  // namespace lcasc
