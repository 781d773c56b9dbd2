#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lcasc {

inline constexpr int kNumScenes = 10;

/* The fixed scene classes, in report order. */
extern const std::array<const char*, kNumScenes> kSceneNames;
extern const std::array<const char*, kNumScenes> kSceneDisplayNames;

/* Recording devices: three real (a, b, c) and six simulated (s1..s6). */
extern const std::array<const char*, 9> kDeviceNames;

int scene_index(const std::string& name);         /* -1 when unknown */
bool is_known_device(const std::string& device);

/* Trailing -<device>.wav token of a clip filename, empty when absent. */
std::string device_from_filename(const std::string& filename);

enum class Split : uint8_t { Train = 0, Eval = 1 };

struct ManifestEntry {
  std::string file;
  int scene = 0;
  std::string city;
  std::string device;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;  /* sorted by file path */

  std::vector<const ManifestEntry*> split(Split which) const;
  std::map<std::string, int> device_histogram(Split which) const;
};

/* Loads DCASE-style tab-separated lists. train_tsv and eval_tsv have header
 * `filename<TAB>scene_label`; either may be "" to skip that split.
 * meta_tsv (optional, pass "" to skip) has at
 * least `filename`, `scene_label`, `identifier`, `source_label` columns and
 * supplies the device per file. Without meta coverage the device falls back
 * to the filename's trailing -<device>.wav token. City comes from the
 * second dash-separated filename token when present. */
DatasetManifest parse_manifest(const std::string& train_tsv,
                               const std::string& eval_tsv,
                               const std::string& meta_tsv);

}  // namespace lcasc
