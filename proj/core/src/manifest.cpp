#include "lcasc/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcasc/errors.hpp"

namespace lcasc {

const std::array<const char*, kNumScenes> kSceneNames = {
    "airport",        "bus",
    "metro",          "metro_station",
    "park",           "public_square",
    "shopping_mall",  "street_pedestrian",
    "street_traffic", "tram",
};

const std::array<const char*, kNumScenes> kSceneDisplayNames = {
    "Airport",        "Bus",
    "Metro",          "Metro station",
    "Park",           "Public square",
    "Shopping mall",  "Street pedestrian",
    "Street traffic", "Tram",
};

const std::array<const char*, 9> kDeviceNames = {
    "a", "b", "c", "s1", "s2", "s3", "s4", "s5", "s6",
};

int scene_index(const std::string& name) {
  for (int i = 0; i < kNumScenes; ++i) {
    if (name == kSceneNames[size_t(i)]) return i;
  }
  return -1;
}

bool is_known_device(const std::string& device) {
  for (const char* d : kDeviceNames) {
    if (device == d) return true;
  }
  return false;
}

std::string device_from_filename(const std::string& filename) {
  std::string stem = std::filesystem::path(filename).stem().string();
  size_t dash = stem.rfind('-');
  if (dash == std::string::npos || dash + 1 >= stem.size()) return "";
  return stem.substr(dash + 1);
}

std::vector<const ManifestEntry*> DatasetManifest::split(Split which) const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : entries) {
    if (e.split == which) out.push_back(&e);
  }
  return out;
}

std::map<std::string, int> DatasetManifest::device_histogram(Split which) const {
  std::map<std::string, int> out;
  for (const ManifestEntry& e : entries) {
    if (e.split == which) ++out[e.device];
  }
  return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, '\t')) out.push_back(cell);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

struct MetaRow {
  std::string device;
};

std::map<std::string, MetaRow> load_meta(const std::string& path) {
  std::map<std::string, MetaRow> out;
  if (path.empty()) return out;
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  std::vector<std::string> header = split_tabs(strip_cr(line));
  int file_col = -1, device_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "filename") file_col = int(i);
    if (header[i] == "source_label") device_col = int(i);
  }
  if (file_col < 0 || device_col < 0) {
    throw DataError(path + ": header lacks filename/source_label columns");
  }

  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = split_tabs(line);
    if (int(cells.size()) <= std::max(file_col, device_col)) {
      throw DataError(path + ": malformed row (line " + std::to_string(line_no) + ")");
    }
    out[cells[size_t(file_col)]] = {cells[size_t(device_col)]};
  }
  return out;
}

std::string city_from_filename(const std::string& filename) {
  std::string stem = std::filesystem::path(filename).stem().string();
  size_t first = stem.find('-');
  if (first == std::string::npos) return "";
  size_t second = stem.find('-', first + 1);
  if (second == std::string::npos) return stem.substr(first + 1);
  return stem.substr(first + 1, second - first - 1);
}

void load_split(const std::string& path, Split split,
                const std::map<std::string, MetaRow>& meta,
                std::vector<ManifestEntry>& entries) {
  if (path.empty()) return;
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);

  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  std::vector<std::string> header = split_tabs(strip_cr(line));
  int file_col = -1, scene_col = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "filename") file_col = int(i);
    if (header[i] == "scene_label") scene_col = int(i);
  }
  if (file_col < 0 || scene_col < 0) {
    throw DataError(path + ": header lacks filename/scene_label columns");
  }

  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = split_tabs(line);
    if (int(cells.size()) <= std::max(file_col, scene_col)) {
      throw DataError(path + ": malformed row (line " + std::to_string(line_no) + ")");
    }
    ManifestEntry e;
    e.file = cells[size_t(file_col)];
    if (e.file.empty()) {
      throw DataError(path + ": malformed row (line " + std::to_string(line_no) + ")");
    }
    const std::string& scene = cells[size_t(scene_col)];
    e.scene = scene_index(scene);
    if (e.scene < 0) {
      throw DataError(path + ": unknown scene label '" + scene + "' (line " +
                      std::to_string(line_no) + ")");
    }
    auto m = meta.find(e.file);
    e.device = m != meta.end() ? m->second.device : device_from_filename(e.file);
    if (!is_known_device(e.device)) {
      throw DataError(path + ": unknown device '" + e.device + "' (line " +
                      std::to_string(line_no) + ")");
    }
    e.city = city_from_filename(e.file);
    e.split = split;
    entries.push_back(std::move(e));
  }
}

}  // namespace

DatasetManifest parse_manifest(const std::string& train_tsv,
                               const std::string& eval_tsv,
                               const std::string& meta_tsv) {
  std::map<std::string, MetaRow> meta = load_meta(meta_tsv);

  DatasetManifest manifest;
  load_split(train_tsv, Split::Train, meta, manifest.entries);
  load_split(eval_tsv, Split::Eval, meta, manifest.entries);

  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) {
              return a.file < b.file;
            });
  for (size_t i = 1; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].file == manifest.entries[i - 1].file) {
      throw DataError("duplicate filename '" + manifest.entries[i].file + "'");
    }
  }
  return manifest;
}

}  // namespace lcasc
