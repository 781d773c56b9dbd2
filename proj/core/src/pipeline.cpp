#include "lcasc/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "lcasc/audio.hpp"
#include "lcasc/errors.hpp"
#include "lcasc/features.hpp"

namespace lcasc {

namespace fs = std::filesystem;

std::string feature_rel_path(const std::string& wav_rel) {
  std::string out = wav_rel;
  size_t dot = out.rfind('.');
  if (dot != std::string::npos && out.find('/', dot) == std::string::npos) {
    out.erase(dot);
  }
  return out + ".lcft";
}

int extract_corpus(const std::string& data_root,
                   const std::vector<FilterbankKind>& kinds,
                   const std::string& out_dir, const FrontendConfig& cfg) {
  cfg.validate();
  if (!fs::is_directory(data_root)) {
    throw DataError("not a directory: " + data_root);
  }

  std::vector<std::string> rels;
  for (const auto& e : fs::recursive_directory_iterator(data_root)) {
    if (!e.is_regular_file() || e.path().extension() != ".wav") continue;
    rels.push_back(fs::relative(e.path(), data_root).generic_string());
  }
  std::sort(rels.begin(), rels.end());

  int written = 0;
  for (const auto& rel : rels) {
    AudioClip clip;
    bool loaded = false;
    for (FilterbankKind kind : kinds) {
      fs::path out = fs::path(out_dir) / filterbank_name(kind) /
                     feature_rel_path(rel);
      if (fs::exists(out)) continue;
      if (!loaded) {
        clip = load_wav((fs::path(data_root) / rel).string());
        loaded = true;
      }
      FrontendConfig kcfg = cfg;
      kcfg.filterbank = kind;
      Tensor spec = extract(clip, kcfg);
      write_lcft(out.string(), spec, kind);
      ++written;
    }
  }
  return written;
}

Tensor load_feature(const std::string& feature_dir, FilterbankKind kind,
                    const std::string& wav_rel) {
  fs::path path = fs::path(feature_dir) / filterbank_name(kind) /
                  feature_rel_path(wav_rel);
  LcftFile f = read_lcft(path.string());
  if (f.kind != kind) {
    throw DataError(path.string() + ": cached filterbank is " +
                    filterbank_name(f.kind) + ", expected " +
                    filterbank_name(kind));
  }
  return std::move(f.spec);
}

FitOutcome fit(const DatasetManifest& manifest, FilterbankKind kind,
               ModelId id, bool decomposed, const std::string& feature_dir,
               const RunConfig& cfg, std::ostream* log_out) {
  auto train = manifest.split(Split::Train);
  if (train.empty()) throw DataError("empty train split");

  std::vector<Tensor> features;
  std::vector<LabelVector> labels;
  features.reserve(train.size());
  labels.reserve(train.size());
  for (const ManifestEntry* e : train) {
    features.push_back(load_feature(feature_dir, kind, e->file));
    labels.push_back(LabelVector::one_hot(e->scene, kNumScenes));
  }

  FitOutcome out;
  out.net = std::make_unique<Network>(make_model_spec(id, decomposed),
                                      cfg.train.seed);
  out.result = train_loop(*out.net, features, labels, cfg.train, cfg.augment,
                          log_out);
  return out;
}

Scorer cached_scorer(Network& net, const std::string& feature_dir,
                     FilterbankKind kind) {
  return [&net, feature_dir, kind](const ManifestEntry& e) {
    Tensor spec = load_feature(feature_dir, kind, e.file);
    return predict(net, spec);
  };
}

}  // namespace lcasc
