#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lcasc/errors.hpp"
#include "lcasc/fusion.hpp"

using namespace lcasc;

namespace {

ProbVector simplex_point(Rng& rng, int classes, double floor = 1e-4) {
  ProbVector p;
  double sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    p.p.push_back(floor + rng.uniform());
    sum += p.p.back();
  }
  for (double& x : p.p) x /= sum;
  return p;
}

ManifestEntry entry(const std::string& file, int scene, const std::string& device,
                    Split split) {
  ManifestEntry e;
  e.file = file;
  e.scene = scene;
  e.city = "lisbon";
  e.device = device;
  e.split = split;
  return e;
}

DatasetManifest oracle_manifest() {
  DatasetManifest m;
  const char* devices[3] = {"a", "s4", "s5"};
  for (int scene = 0; scene < kNumScenes; ++scene) {
    for (int k = 0; k < 3; ++k) {
      std::string file = std::string(kSceneNames[size_t(scene)]) + "-lisbon-1-" +
                         std::to_string(k) + "-" + devices[k] + ".wav";
      m.entries.push_back(entry(file, scene, devices[k], Split::Eval));
    }
  }
  return m;
}

Scorer oracle(double confidence) {
  return [confidence](const ManifestEntry& e) {
    ProbVector p;
    p.p.assign(kNumScenes, (1.0 - confidence) / (kNumScenes - 1));
    p.p[size_t(e.scene)] = confidence;
    return p;
  };
}

}  // namespace

TEST_CASE("prod fuse reproduces the two-model worked example exactly") {
  ProbVector p1{{0.6, 0.4}};
  ProbVector p2{{0.5, 0.5}};
  FusedScore fused = prod_fuse({p1, p2});
  REQUIRE(fused.s.size() == 2);
  CHECK(fused.s[0] == 0.15);
  CHECK(fused.s[1] == 0.10);
}

TEST_CASE("single-model fusion is the identity") {
  ProbVector p{{0.2, 0.5, 0.3}};
  FusedScore fused = prod_fuse({p});
  CHECK(fused.s == p.p);
}

TEST_CASE("fusion refuses mismatched class counts") {
  ProbVector a{{0.5, 0.5}};
  ProbVector b{{0.3, 0.3, 0.4}};
  CHECK_THROWS_AS(prod_fuse({a, b}), UsageError);
  CHECK_THROWS_AS(prod_fuse({}), UsageError);
}

TEST_CASE("decide takes the first maximum") {
  CHECK(decide(FusedScore{{0.15, 0.10}}) == 0);
  CHECK(decide(FusedScore{{0.2, 0.5, 0.5}}) == 1);
  CHECK(decide(FusedScore{{0.5, 0.5, 0.5}}) == 0);
  CHECK(decide(FusedScore{{0.1, 0.2, 0.7}}) == 2);
}

TEST_CASE("product and log-domain decisions agree on random inputs") {
  Rng rng(201);
  int mismatches = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<ProbVector> vs;
    for (int s = 0; s < 3; ++s) vs.push_back(simplex_point(rng, kNumScenes));
    if (decide(prod_fuse(vs)) != decide_log(vs)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("log-domain fusion survives many confident models") {
  /* 400 models at 1e-4 tails would underflow the direct product. */
  std::vector<ProbVector> vs;
  for (int s = 0; s < 400; ++s) {
    ProbVector p;
    p.p.assign(kNumScenes, 1e-4 / 9.0);
    p.p[3] = 1.0 - 1e-4;
    vs.push_back(p);
  }
  CHECK(decide_log(vs) == 3);
}

TEST_CASE("predict emits a distribution from the center crop") {
  Network net(make_model_spec(ModelId::M1, true), 55);
  Tensor spec = Tensor::spectrogram(128, 135, 3);
  Rng rng(56);
  for (double& v : spec.v) v = rng.uniform(-1.0, 1.0);

  ProbVector p = predict(net, spec);
  REQUIRE(p.p.size() == kNumScenes);
  double sum = 0.0;
  for (double x : p.p) {
    CHECK(x > 0.0);
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  /* Shifting content outside the central 128 frames changes nothing. */
  Tensor shifted = spec;
  for (int f = 0; f < 128; ++f) {
    for (int c = 0; c < 3; ++c) {
      shifted.sp(f, 0, c) += 100.0;
      shifted.sp(f, 134, c) -= 50.0;
    }
  }
  ProbVector q = predict(net, shifted);
  for (size_t c = 0; c < p.p.size(); ++c) {
    CHECK(q.p[c] == doctest::Approx(p.p[c]).epsilon(1e-12));
  }
}

TEST_CASE("an all-zero network predicts the uniform distribution") {
  Network net(make_model_spec(ModelId::M1, false), 1);
  for (Param* p : net.params()) {
    if (p->name.back() == 'w' || p->name.back() == 'b') {
      std::fill(p->v.begin(), p->v.end(), 0.0);
    }
  }
  Tensor spec = Tensor::spectrogram(128, 135, 3);
  Rng rng(57);
  for (double& v : spec.v) v = rng.uniform(-1.0, 1.0);
  ProbVector p = predict(net, spec);
  for (double x : p.p) CHECK(x == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("oracle scorers score a perfect table") {
  DatasetManifest m = oracle_manifest();
  EvalReport report = evaluate(m, {oracle(0.9), oracle(0.8), oracle(0.7)});

  CHECK(report.overall.total == 30);
  CHECK(report.overall.correct == 30);
  CHECK(report.overall.accuracy() == 100.0);
  for (const auto& cell : report.per_class) {
    CHECK(cell.total == 3);
    CHECK(cell.accuracy() == 100.0);
  }
  REQUIRE(report.per_device.size() == 3);
  for (const auto& [device, cell] : report.per_device) {
    CHECK(cell.total == 10);
    CHECK(cell.accuracy() == 100.0);
  }
}

TEST_CASE("evaluation ignores train-split entries") {
  DatasetManifest m = oracle_manifest();
  m.entries.push_back(entry("z-train.wav", 0, "a", Split::Train));
  EvalReport report = evaluate(m, {oracle(0.9)});
  CHECK(report.overall.total == 30);
}

TEST_CASE("empty scorer list refuses") {
  DatasetManifest m = oracle_manifest();
  CHECK_THROWS_AS(evaluate(m, {}), UsageError);
}

TEST_CASE("report accounting is count-weighted") {
  DatasetManifest m;
  m.entries.push_back(entry("airport-a-1-0-a.wav", 0, "a", Split::Eval));
  m.entries.push_back(entry("bus-a-1-1-a.wav", 1, "a", Split::Eval));
  m.entries.push_back(entry("bus-b-1-2-s4.wav", 1, "s4", Split::Eval));
  m.entries.push_back(entry("bus-c-1-3-s4.wav", 1, "s4", Split::Eval));

  /* Always says bus: right 3 of 4 overall, wrong on the airport clip. */
  Scorer always_bus = [](const ManifestEntry&) {
    ProbVector p;
    p.p.assign(kNumScenes, 0.01 / 9.0);
    p.p[1] = 0.99;
    double sum = 0.0;
    for (double x : p.p) sum += x;
    for (double& x : p.p) x /= sum;
    return p;
  };
  EvalReport report = evaluate(m, {always_bus});
  CHECK(report.overall.total == 4);
  CHECK(report.overall.correct == 3);
  CHECK(report.per_class[0].accuracy() == 0.0);
  CHECK(report.per_class[1].accuracy() == 100.0);
  CHECK(report.per_device.at("a").correct == 1);
  CHECK(report.per_device.at("a").total == 2);
  CHECK(report.per_device.at("s4").accuracy() == 100.0);
}

TEST_CASE("text report carries class rows, average, and device block") {
  DatasetManifest m = oracle_manifest();
  EvalReport report = evaluate(m, {oracle(0.9)});
  std::string text = report.to_text();
  for (const char* name : kSceneDisplayNames) {
    CHECK(text.find(name) != std::string::npos);
  }
  CHECK(text.find("Average") != std::string::npos);
  CHECK(text.find("Device") != std::string::npos);
  CHECK(text.find("100.0") != std::string::npos);

  std::string records = report.to_records();
  CHECK(records.find("class=airport acc=100 n=3") != std::string::npos);
  CHECK(records.find("device=s4 acc=100 n=10") != std::string::npos);
  CHECK(records.find("overall acc=100") != std::string::npos);
}

TEST_CASE("disagreeing models fuse by evidence strength") {
  /* Two weakly wrong models against one confidently right one. */
  ProbVector wrong{{0.55, 0.45}};
  ProbVector right{{0.02, 0.98}};
  CHECK(decide(prod_fuse({wrong, wrong, right})) == 1);
  CHECK(decide_log({wrong, wrong, right}) == 1);
}
