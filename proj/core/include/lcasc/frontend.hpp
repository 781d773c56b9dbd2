#pragma once

#include <cstdint>
#include <vector>

#include "lcasc/audio.hpp"
#include "lcasc/tensor.hpp"

namespace lcasc {

inline constexpr int kSampleRate = 44100;

enum class FilterbankKind : uint8_t { Mel = 0, Gammatone = 1, Cqt = 2 };

const char* filterbank_name(FilterbankKind kind);

struct FrontendConfig {
  int n_fft = 4096;
  int window_len = 2048;
  int hop = 306;
  int n_filters = 128;
  int target_frames = 135;
  FilterbankKind filterbank = FilterbankKind::Mel;
  double log_floor = 1e-10;
  int delta_width = 9;

  void validate() const;  /* throws UsageError */
};

/* Weighting matrix taking a power spectrum (n_fft/2+1 bins) to filter
 * outputs. Rows are filters, columns are FFT bins. */
struct FilterbankMatrix {
  FilterbankKind kind = FilterbankKind::Mel;
  int n_filters = 0;
  int n_bins = 0;
  std::vector<double> w;  /* n_filters x n_bins, row-major */

  double& at(int filt, int bin) { return w[size_t(filt) * n_bins + bin]; }
  double at(int filt, int bin) const { return w[size_t(filt) * n_bins + bin]; }
};

/* Frequency-scale helpers, exposed so tests can cross-check placements. */
namespace scales {
double hz_to_mel(double hz);
double mel_to_hz(double mel);
/* ERB-rate (cam) scale and the equivalent rectangular bandwidth at f. */
double hz_to_erb_rate(double hz);
double erb_rate_to_hz(double erb);
double erb_bandwidth(double hz);
}  // namespace scales

/* Center frequencies the filterbank is built around, ascending. */
std::vector<double> filterbank_centers(const FrontendConfig& cfg);

/* Hann-windowed power spectrogram: (n_fft/2+1) x frames x 1, where
 * frames = (len - window_len)/hop + 1 with no padding. Frames are windowed,
 * zero-padded to n_fft, transformed, and squared. */
Tensor stft_power(const AudioClip& clip, const FrontendConfig& cfg);

FilterbankMatrix build_filterbank(const FrontendConfig& cfg);

/* Filterbank + 10*log10(x + log_floor), frame axis fitted to target_frames:
 * center-trim when long (the odd extra frame comes off the end), edge
 * replication when short. Shape n_filters x target_frames x 1. */
Tensor log_filterbank_spectrogram(const AudioClip& clip, const FrontendConfig& cfg);

/* Appends regression delta and delta-delta channels to a 1-channel
 * spectrogram. width must be odd; frames beyond the edges are replicated. */
Tensor add_deltas(const Tensor& spec, int width);

/* Full front end: stft_power, filterbank, log, frame fit, deltas.
 * Shape n_filters x target_frames x 3. */
Tensor extract(const AudioClip& clip, const FrontendConfig& cfg);

}  // namespace lcasc
