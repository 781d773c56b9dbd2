#include "lcasc/frontend.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "lcasc/errors.hpp"

namespace lcasc {

const char* filterbank_name(FilterbankKind kind) {
  switch (kind) {
    case FilterbankKind::Mel: return "mel";
    case FilterbankKind::Gammatone: return "gam";
    case FilterbankKind::Cqt: return "cqt";
  }
  return "?";
}

void FrontendConfig::validate() const {
  if (n_fft < 2 || window_len < 2 || n_fft < window_len) {
    throw UsageError("frontend: need n_fft >= window_len >= 2");
  }
  if (hop < 1) throw UsageError("frontend: hop must be >= 1");
  if (n_filters < 1) throw UsageError("frontend: n_filters must be >= 1");
  if (target_frames < 1) throw UsageError("frontend: target_frames must be >= 1");
  if (!(log_floor > 0.0)) throw UsageError("frontend: log_floor must be > 0");
  if (delta_width % 2 == 0 || delta_width < 3) throw UsageError("invalid delta width");
}

namespace scales {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double hz_to_erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

double erb_rate_to_hz(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437;
}

double erb_bandwidth(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }

}  // namespace scales

namespace {

constexpr double kNyquist = kSampleRate / 2.0;
constexpr double kCqtFmin = 32.7;
constexpr double kGammatoneFmin = 50.0;

std::vector<double> hann_window(int len) {
  std::vector<double> w(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    w[size_t(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (len - 1)));
  }
  return w;
}

/* FFTW plan creation and destruction share global state. */
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<double> filterbank_centers(const FrontendConfig& cfg) {
  cfg.validate();
  int n = cfg.n_filters;
  std::vector<double> centers(static_cast<size_t>(n));
  switch (cfg.filterbank) {
    case FilterbankKind::Mel: {
      /* Centers are the interior points of the n+2 point edge grid. */
      double lo = scales::hz_to_mel(0.0);
      double hi = scales::hz_to_mel(kNyquist);
      for (int i = 0; i < n; ++i) {
        double mel = lo + (hi - lo) * double(i + 1) / double(n + 1);
        centers[size_t(i)] = scales::mel_to_hz(mel);
      }
      break;
    }
    case FilterbankKind::Gammatone: {
      double lo = scales::hz_to_erb_rate(kGammatoneFmin);
      double hi = scales::hz_to_erb_rate(kNyquist);
      for (int i = 0; i < n; ++i) {
        double e = n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1);
        centers[size_t(i)] = scales::erb_rate_to_hz(e);
      }
      break;
    }
    case FilterbankKind::Cqt: {
      double ratio = n == 1 ? 1.0 : std::log(kNyquist / kCqtFmin) / double(n - 1);
      for (int i = 0; i < n; ++i) {
        centers[size_t(i)] = kCqtFmin * std::exp(ratio * i);
      }
      break;
    }
  }
  return centers;
}

Tensor stft_power(const AudioClip& clip, const FrontendConfig& cfg) {
  cfg.validate();
  if (clip.sample_rate != kSampleRate) throw DataError("unsupported sample rate");
  if (int(clip.samples.size()) < cfg.window_len) throw DataError("input too short");

  int frames = int((clip.samples.size() - size_t(cfg.window_len)) / size_t(cfg.hop)) + 1;
  int n_bins = cfg.n_fft / 2 + 1;
  Tensor out = Tensor::spectrogram(n_bins, frames, 1);

  std::vector<double> window = hann_window(cfg.window_len);

  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * size_t(cfg.n_fft)));
  auto* spec = static_cast<fftw_complex*>(
      fftw_malloc(sizeof(fftw_complex) * size_t(n_bins)));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft_r2c_1d(cfg.n_fft, in, spec, FFTW_ESTIMATE);
  }

  for (int t = 0; t < frames; ++t) {
    const double* src = clip.samples.data() + size_t(t) * size_t(cfg.hop);
    for (int i = 0; i < cfg.window_len; ++i) in[i] = src[i] * window[size_t(i)];
    std::fill(in + cfg.window_len, in + cfg.n_fft, 0.0);
    fftw_execute(plan);
    for (int k = 0; k < n_bins; ++k) {
      out.sp(k, t, 0) = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
  }

  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(spec);
  return out;
}

FilterbankMatrix build_filterbank(const FrontendConfig& cfg) {
  cfg.validate();
  FilterbankMatrix fb;
  fb.kind = cfg.filterbank;
  fb.n_filters = cfg.n_filters;
  fb.n_bins = cfg.n_fft / 2 + 1;
  fb.w.assign(size_t(fb.n_filters) * size_t(fb.n_bins), 0.0);

  double bin_hz = double(kSampleRate) / cfg.n_fft;
  std::vector<double> centers = filterbank_centers(cfg);

  switch (cfg.filterbank) {
    case FilterbankKind::Mel: {
      /* Triangles span adjacent points of the mel-uniform edge grid. */
      double lo = scales::hz_to_mel(0.0);
      double hi = scales::hz_to_mel(kNyquist);
      auto edge = [&](int i) {
        return scales::mel_to_hz(lo + (hi - lo) * double(i) / double(cfg.n_filters + 1));
      };
      for (int m = 0; m < cfg.n_filters; ++m) {
        double fl = edge(m), fc = edge(m + 1), fr = edge(m + 2);
        for (int k = 0; k < fb.n_bins; ++k) {
          double f = k * bin_hz;
          double up = (f - fl) / (fc - fl);
          double down = (fr - f) / (fr - fc);
          fb.at(m, k) = std::max(0.0, std::min(up, down));
        }
      }
      break;
    }
    case FilterbankKind::Gammatone: {
      /* Fourth-order gammatone magnitude, sampled and peak-normalized. */
      for (int m = 0; m < cfg.n_filters; ++m) {
        double fc = centers[size_t(m)];
        double b = 1.019 * scales::erb_bandwidth(fc);
        double peak = 0.0;
        for (int k = 0; k < fb.n_bins; ++k) {
          double u = (k * bin_hz - fc) / b;
          double resp = std::pow(1.0 + u * u, -2.0);
          fb.at(m, k) = resp;
          peak = std::max(peak, resp);
        }
        if (peak > 0.0) {
          for (int k = 0; k < fb.n_bins; ++k) fb.at(m, k) /= peak;
        }
      }
      break;
    }
    case FilterbankKind::Cqt: {
      /* Triangles of one geometric step half-width on the log-frequency axis.
       * The bottom filters are narrower than an FFT bin; their rows may be
       * all-zero and the log floor keeps downstream values defined. */
      double step = cfg.n_filters == 1
                        ? 1.0
                        : std::log(kNyquist / kCqtFmin) / double(cfg.n_filters - 1);
      for (int m = 0; m < cfg.n_filters; ++m) {
        double lc = std::log(centers[size_t(m)]);
        for (int k = 1; k < fb.n_bins; ++k) {
          double d = std::abs(std::log(k * bin_hz) - lc) / step;
          if (d < 1.0) fb.at(m, k) = 1.0 - d;
        }
      }
      break;
    }
  }
  return fb;
}

namespace {

/* Fits the frame axis to target length: trims centered with the odd frame
 * dropped at the end, or replicates edge frames when short. */
Tensor fit_frames(const Tensor& spec, int target) {
  if (spec.w == target) return spec;
  Tensor out = Tensor::spectrogram(spec.h, target, spec.c);
  int shift;
  if (spec.w > target) {
    shift = (spec.w - target) / 2;
  } else {
    shift = -((target - spec.w) / 2);
  }
  for (int f = 0; f < spec.h; ++f) {
    for (int t = 0; t < target; ++t) {
      int src = std::clamp(t + shift, 0, spec.w - 1);
      for (int ch = 0; ch < spec.c; ++ch) {
        out.sp(f, t, ch) = spec.sp(f, src, ch);
      }
    }
  }
  return out;
}

}  // namespace

Tensor log_filterbank_spectrogram(const AudioClip& clip, const FrontendConfig& cfg) {
  Tensor power = stft_power(clip, cfg);
  FilterbankMatrix fb = build_filterbank(cfg);

  Tensor banked = Tensor::spectrogram(cfg.n_filters, power.w, 1);
  for (int m = 0; m < cfg.n_filters; ++m) {
    for (int t = 0; t < power.w; ++t) {
      double acc = 0.0;
      for (int k = 0; k < fb.n_bins; ++k) {
        acc += fb.at(m, k) * power.sp(k, t, 0);
      }
      banked.sp(m, t, 0) = 10.0 * std::log10(acc + cfg.log_floor);
    }
  }
  return fit_frames(banked, cfg.target_frames);
}

Tensor add_deltas(const Tensor& spec, int width) {
  if (spec.c != 1) throw UsageError("add_deltas: input must have 1 channel");
  if (width % 2 == 0 || width < 3) throw UsageError("invalid delta width");
  if (width > 2 * spec.w + 1) throw UsageError("invalid delta width");

  int m_half = (width - 1) / 2;
  double denom = 0.0;
  for (int n = 1; n <= m_half; ++n) denom += double(n) * n;
  denom *= 2.0;

  Tensor out = Tensor::spectrogram(spec.h, spec.w, 3);
  auto delta_at = [&](auto&& value, int f, int t) {
    double acc = 0.0;
    for (int n = 1; n <= m_half; ++n) {
      int right = std::clamp(t + n, 0, spec.w - 1);
      int left = std::clamp(t - n, 0, spec.w - 1);
      acc += n * (value(f, right) - value(f, left));
    }
    return acc / denom;
  };

  for (int f = 0; f < spec.h; ++f) {
    for (int t = 0; t < spec.w; ++t) {
      out.sp(f, t, 0) = spec.sp(f, t, 0);
    }
  }
  for (int f = 0; f < spec.h; ++f) {
    for (int t = 0; t < spec.w; ++t) {
      out.sp(f, t, 1) = delta_at(
          [&](int ff, int tt) { return spec.sp(ff, tt, 0); }, f, t);
    }
  }
  for (int f = 0; f < spec.h; ++f) {
    for (int t = 0; t < spec.w; ++t) {
      out.sp(f, t, 2) = delta_at(
          [&](int ff, int tt) { return out.sp(ff, tt, 1); }, f, t);
    }
  }
  return out;
}

Tensor extract(const AudioClip& clip, const FrontendConfig& cfg) {
  return add_deltas(log_filterbank_spectrogram(clip, cfg), cfg.delta_width);
}

}  // namespace lcasc
