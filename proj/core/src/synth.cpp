#include "lcasc/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lcasc/errors.hpp"
#include "lcasc/frontend.hpp"
#include "lcasc/manifest.hpp"
#include "lcasc/rng.hpp"

namespace lcasc {

void SynthSpec::validate() const {
  if (classes < 1 || classes > kNumScenes) {
    throw UsageError("synth: classes must be in [1, 10]");
  }
  if (train_per_class < 1) throw UsageError("synth: train_per_class must be >= 1");
  if (eval_per_class < 0) throw UsageError("synth: eval_per_class must be >= 0");
}

namespace {

/* Half-octave ladder starting at 250 Hz; well inside every filterbank. */
double scene_tone(int scene) { return 250.0 * std::pow(2.0, 0.5 * scene); }

double device_gain(const std::string& device) {
  if (device == "a") return 1.0;
  if (device == "b") return 0.85;
  if (device == "c") return 1.15;
  /* s1..s6 */
  int k = device.size() == 2 ? device[1] - '0' : 1;
  return 0.65 + 0.08 * k;
}

const char* kCities[3] = {"lisbon", "paris", "vienna"};
const char* kTrainDevices[6] = {"a", "b", "c", "s1", "s2", "s3"};
const char* kEvalDevices[6] = {"a", "b", "c", "s4", "s5", "s6"};

}  // namespace

AudioClip synth_clip(int scene, const std::string& device, uint64_t seed) {
  if (scene < 0 || scene >= kNumScenes) throw UsageError("synth: scene out of range");
  Rng rng(seed);
  double f0 = scene_tone(scene);
  double phase0 = rng.uniform(0.0, 2.0 * M_PI);
  double phase1 = rng.uniform(0.0, 2.0 * M_PI);
  double jitter = rng.uniform(0.9, 1.1);
  double gain = device_gain(device) * jitter;

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  clip.samples.resize(size_t(kSampleRate));
  for (size_t i = 0; i < clip.samples.size(); ++i) {
    double t = double(i) / double(kSampleRate);
    double s = 0.40 * std::sin(2.0 * M_PI * f0 * t + phase0) +
               0.20 * std::sin(2.0 * M_PI * 2.0 * f0 * t + phase1) +
               0.02 * (rng.uniform() * 2.0 - 1.0);
    clip.samples[i] = gain * s;
  }
  return clip;
}

int write_synth_corpus(const std::string& root, const SynthSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(root) / "audio");

  std::ofstream train_csv(fs::path(root) / "train.csv");
  std::ofstream eval_csv(fs::path(root) / "evaluate.csv");
  std::ofstream meta_csv(fs::path(root) / "meta.csv");
  if (!train_csv || !eval_csv || !meta_csv) {
    throw DataError("cannot create corpus listing files under " + root);
  }
  train_csv << "filename\tscene_label\n";
  eval_csv << "filename\tscene_label\n";
  meta_csv << "filename\tscene_label\tidentifier\tsource_label\n";

  int written = 0;
  int eval_idx = 0;
  for (int scene = 0; scene < spec.classes; ++scene) {
    int total = spec.train_per_class + spec.eval_per_class;
    for (int k = 0; k < total; ++k) {
      bool is_train = k < spec.train_per_class;
      const char* device =
          is_train ? kTrainDevices[k % 6] : kEvalDevices[eval_idx++ % 6];
      const char* city = kCities[k % 3];
      std::string name = std::string(kSceneNames[size_t(scene)]) + "-" + city +
                         "-" + std::to_string(1000 + scene) + "-" +
                         std::to_string(40000 + k) + "-" + device + ".wav";
      std::string rel = "audio/" + name;

      uint64_t clip_seed = spec.seed * 1000003u + uint64_t(scene) * 131u + uint64_t(k);
      AudioClip clip = synth_clip(scene, device, clip_seed);
      write_wav((fs::path(root) / rel).string(), clip.samples, clip.sample_rate);

      (is_train ? train_csv : eval_csv)
          << rel << "\t" << kSceneNames[size_t(scene)] << "\n";
      meta_csv << rel << "\t" << kSceneNames[size_t(scene)] << "\t" << city
               << "-" << 1000 + scene << "\t" << device << "\n";
      ++written;
    }
  }
  return written;
}

}  // namespace lcasc
