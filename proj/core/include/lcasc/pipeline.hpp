#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lcasc/config.hpp"
#include "lcasc/fusion.hpp"
#include "lcasc/manifest.hpp"
#include "lcasc/model.hpp"
#include "lcasc/train.hpp"

namespace lcasc {

/* audio/a.wav -> audio/a.lcft */
std::string feature_rel_path(const std::string& wav_rel);

/* Extracts features for every .wav under data_root into
 * out_dir/<filterbank>/<relative path>.lcft, one tree per requested kind.
 * Files already present are kept as-is, so re-runs only fill gaps.
 * Returns the number of files written this call. */
int extract_corpus(const std::string& data_root,
                   const std::vector<FilterbankKind>& kinds,
                   const std::string& out_dir, const FrontendConfig& cfg);

/* Reads one cached tensor and checks it carries the expected filterbank. */
Tensor load_feature(const std::string& feature_dir, FilterbankKind kind,
                    const std::string& wav_rel);

struct FitOutcome {
  std::unique_ptr<Network> net;
  TrainResult result;
};

/* Trains one model on the manifest's train split from cached features.
 * An empty train split or a feature whose shape disagrees with the model
 * input is a data error. */
FitOutcome fit(const DatasetManifest& manifest, FilterbankKind kind,
               ModelId id, bool decomposed, const std::string& feature_dir,
               const RunConfig& cfg, std::ostream* log_out);

/* Scorer that feeds the network from the cached feature tree. */
Scorer cached_scorer(Network& net, const std::string& feature_dir,
                     FilterbankKind kind);

}  // namespace lcasc
