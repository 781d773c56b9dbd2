#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lcasc/manifest.hpp"
#include "lcasc/model.hpp"

namespace lcasc {

/* Post-softmax class probabilities: strictly positive, summing to 1. */
struct ProbVector {
  std::vector<double> p;
};

/* Elementwise product across models scaled by 1/S. Not normalized; only the
 * argmax matters downstream. */
struct FusedScore {
  std::vector<double> s;
};

/* Center-crops the time axis to 128 frames and runs the network in infer
 * mode. Input is the cached 3-channel spectrogram (n_filters x frames x 3). */
ProbVector predict(Network& net, const Tensor& spec);

/* (1/S) * prod_s p_s, computed exactly as written. */
FusedScore prod_fuse(const std::vector<ProbVector>& vectors);

/* Argmax with ties broken toward the lowest index. */
int decide(const FusedScore& scores);

/* Argmax of sum_s ln p_sc: the underflow-safe route used by evaluation.
 * Agrees with decide(prod_fuse(...)) for strictly positive inputs. */
int decide_log(const std::vector<ProbVector>& vectors);

struct EvalReport {
  struct Cell {
    int total = 0;
    int correct = 0;
    double accuracy() const {
      return total == 0 ? 0.0 : 100.0 * double(correct) / double(total);
    }
  };

  std::array<Cell, kNumScenes> per_class;
  std::map<std::string, Cell> per_device;
  Cell overall;

  /* Aligned table: one row per scene, Average, then the device block. */
  std::string to_text() const;
  /* Line records: class=<name> acc=<float> n=<int>, device=..., overall. */
  std::string to_records() const;
};

/* One model's scoring function for a manifest entry. */
using Scorer = std::function<ProbVector(const ManifestEntry&)>;

/* Runs every eval-split entry through all scorers, fuses in the log domain,
 * and aggregates per class, per device, and overall. */
EvalReport evaluate(const DatasetManifest& manifest,
                    const std::vector<Scorer>& scorers);

/* Scorer over a trained network fed by a feature provider. */
Scorer network_scorer(Network& net,
                      std::function<Tensor(const ManifestEntry&)> features);

}  // namespace lcasc
