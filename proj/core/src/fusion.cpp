#include "lcasc/fusion.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "lcasc/errors.hpp"
#include "lcasc/train.hpp"

namespace lcasc {

ProbVector predict(Network& net, const Tensor& spec) {
  Tensor cropped = center_crop(spec, 128);
  Tensor probs = net.forward(cropped, Mode::Infer, nullptr);
  if (probs.n != 1 || probs.h != 1 || probs.w != 1) {
    throw UsageError("layer/input shape conflict");
  }
  ProbVector out;
  out.p.assign(probs.v.begin(), probs.v.end());
  return out;
}

FusedScore prod_fuse(const std::vector<ProbVector>& vectors) {
  if (vectors.empty()) throw UsageError("prod_fuse: need at least one vector");
  size_t classes = vectors.front().p.size();
  for (const ProbVector& v : vectors) {
    if (v.p.size() != classes) throw UsageError("prod_fuse: length mismatch");
  }
  FusedScore out;
  out.s.assign(classes, 1.0 / double(vectors.size()));
  for (const ProbVector& v : vectors) {
    for (size_t c = 0; c < classes; ++c) out.s[c] *= v.p[c];
  }
  return out;
}

int decide(const FusedScore& scores) {
  if (scores.s.empty()) throw UsageError("decide: empty score vector");
  int best = 0;
  for (size_t c = 1; c < scores.s.size(); ++c) {
    if (scores.s[c] > scores.s[size_t(best)]) best = int(c);
  }
  return best;
}

int decide_log(const std::vector<ProbVector>& vectors) {
  if (vectors.empty()) throw UsageError("decide_log: need at least one vector");
  size_t classes = vectors.front().p.size();
  std::vector<double> log_sum(classes, 0.0);
  for (const ProbVector& v : vectors) {
    if (v.p.size() != classes) throw UsageError("decide_log: length mismatch");
    for (size_t c = 0; c < classes; ++c) {
      if (!(v.p[c] > 0.0)) throw DataError("invalid probability input");
      log_sum[c] += std::log(v.p[c]);
    }
  }
  int best = 0;
  for (size_t c = 1; c < classes; ++c) {
    if (log_sum[c] > log_sum[size_t(best)]) best = int(c);
  }
  return best;
}

namespace {

void append_row(std::ostringstream& os, const std::string& label, double acc,
                int n) {
  os << std::left << std::setw(20) << label << std::right << std::setw(8)
     << std::fixed << std::setprecision(1) << acc << std::setw(8) << n << "\n";
}

}  // namespace

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(20) << "Category" << std::right << std::setw(8)
     << "Acc(%)" << std::setw(8) << "N" << "\n";
  for (int i = 0; i < kNumScenes; ++i) {
    append_row(os, kSceneDisplayNames[size_t(i)], per_class[size_t(i)].accuracy(),
               per_class[size_t(i)].total);
  }
  append_row(os, "Average", overall.accuracy(), overall.total);
  os << "\n";
  os << std::left << std::setw(20) << "Device" << std::right << std::setw(8)
     << "Acc(%)" << std::setw(8) << "N" << "\n";
  for (const auto& [device, cell] : per_device) {
    std::string label = device;
    for (char& ch : label) ch = char(std::toupper(ch));
    append_row(os, label, cell.accuracy(), cell.total);
  }
  return os.str();
}

std::string EvalReport::to_records() const {
  std::ostringstream os;
  os << std::setprecision(10);
  for (int i = 0; i < kNumScenes; ++i) {
    os << "class=" << kSceneNames[size_t(i)]
       << " acc=" << per_class[size_t(i)].accuracy()
       << " n=" << per_class[size_t(i)].total << "\n";
  }
  for (const auto& [device, cell] : per_device) {
    os << "device=" << device << " acc=" << cell.accuracy()
       << " n=" << cell.total << "\n";
  }
  os << "overall acc=" << overall.accuracy() << "\n";
  return os.str();
}

EvalReport evaluate(const DatasetManifest& manifest,
                    const std::vector<Scorer>& scorers) {
  if (scorers.empty()) throw UsageError("evaluate: need at least one model");
  std::vector<const ManifestEntry*> items = manifest.split(Split::Eval);
  if (items.empty()) throw DataError("empty eval split");

  EvalReport report;
  for (const ManifestEntry* item : items) {
    std::vector<ProbVector> votes;
    votes.reserve(scorers.size());
    for (const Scorer& scorer : scorers) votes.push_back(scorer(*item));
    int predicted = decide_log(votes);

    bool hit = predicted == item->scene;
    auto& cls = report.per_class[size_t(item->scene)];
    auto& dev = report.per_device[item->device];
    cls.total += 1;
    dev.total += 1;
    report.overall.total += 1;
    if (hit) {
      cls.correct += 1;
      dev.correct += 1;
      report.overall.correct += 1;
    }
  }
  return report;
}

Scorer network_scorer(Network& net,
                      std::function<Tensor(const ManifestEntry&)> features) {
  return [&net, features = std::move(features)](const ManifestEntry& item) {
    return predict(net, features(item));
  };
}

}  // namespace lcasc
