#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lcasc/audio.hpp"
#include "lcasc/binio.hpp"
#include "lcasc/config.hpp"
#include "lcasc/errors.hpp"
#include "lcasc/manifest.hpp"
#include "lcasc/pipeline.hpp"
#include "lcasc/synth.hpp"

using namespace lcasc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& rel, const std::string& content) const {
    fs::path p = path / rel;
    fs::create_directories(p.parent_path());
    std::ofstream(p) << content;
    return p.string();
  }
  std::string str(const std::string& rel = "") const {
    return (rel.empty() ? path : path / rel).string();
  }
};

}  // namespace

TEST_CASE("wav files roundtrip at 16-bit precision") {
  TempDir dir("lcasc_ingest_wav");
  std::vector<double> samples(4410);
  for (size_t i = 0; i < samples.size(); ++i) {
    samples[i] = 0.7 * std::sin(0.013 * double(i));
  }
  std::string path = dir.str("t.wav");
  write_wav(path, samples, 44100);
  AudioClip clip = load_wav(path);
  CHECK(clip.sample_rate == 44100);
  REQUIRE(clip.samples.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(std::fabs(clip.samples[i] - samples[i]) <= 1.0 / 32768.0);
  }
}

TEST_CASE("wav out-of-range samples clip instead of wrapping") {
  TempDir dir("lcasc_ingest_clip");
  std::string path = dir.str("c.wav");
  write_wav(path, {1.5, -1.5, 0.0}, 44100);
  AudioClip clip = load_wav(path);
  CHECK(clip.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(clip.samples[1] == doctest::Approx(-1.0));
}

TEST_CASE("wav loader names the offending field") {
  TempDir dir("lcasc_ingest_badwav");
  CHECK_THROWS_AS(load_wav(dir.str("missing.wav")), DataError);
  std::string garbage = dir.file("g.wav", "not a riff file at all........");
  CHECK_THROWS_AS(load_wav(garbage), DataError);
}

TEST_CASE("filename device token and city fall out of the dcase pattern") {
  CHECK(device_from_filename("audio/airport-lisbon-1000-40000-a.wav") == "a");
  CHECK(device_from_filename("tram-paris-1-2-s6.wav") == "s6");
  CHECK(device_from_filename("noformat.wav") == "");
}

TEST_CASE("manifest parses the dcase tsv schema") {
  TempDir dir("lcasc_ingest_manifest");
  std::string train = dir.file("train.csv",
      "filename\tscene_label\n"
      "audio/airport-lisbon-1000-40000-a.wav\tairport\n"
      "audio/bus-paris-1001-40001-b.wav\tbus\n");
  std::string eval = dir.file("eval.csv",
      "filename\tscene_label\n"
      "audio/tram-vienna-1002-40002-s4.wav\ttram\n");
  std::string meta = dir.file("meta.csv",
      "filename\tscene_label\tidentifier\tsource_label\n"
      "audio/airport-lisbon-1000-40000-a.wav\tairport\tlisbon-1000\ta\n"
      "audio/bus-paris-1001-40001-b.wav\tbus\tparis-1001\tb\n"
      "audio/tram-vienna-1002-40002-s4.wav\ttram\tvienna-1002\ts4\n");

  DatasetManifest m = parse_manifest(train, eval, meta);
  REQUIRE(m.entries.size() == 3);
  CHECK(m.entries[0].file == "audio/airport-lisbon-1000-40000-a.wav");
  CHECK(m.entries[0].scene == 0);
  CHECK(m.entries[0].city == "lisbon");
  CHECK(m.entries[0].device == "a");
  CHECK(m.entries[0].split == Split::Train);
  CHECK(m.entries[2].split == Split::Eval);
  CHECK(m.entries[2].device == "s4");
  CHECK(m.split(Split::Train).size() == 2);
  CHECK(m.split(Split::Eval).size() == 1);
}

TEST_CASE("device falls back to the filename token without meta") {
  TempDir dir("lcasc_ingest_fallback");
  std::string train = dir.file("train.csv",
      "filename\tscene_label\n"
      "audio/airport-lisbon-1000-40000-a.wav\tairport\n"
      "audio/metro-lyon-1003-40003-s2.wav\tmetro\n");
  DatasetManifest m = parse_manifest(train, "", "");
  CHECK(m.entries[0].device == "a");
  CHECK(m.entries[1].device == "s2");
}

TEST_CASE("extra tsv columns and crlf endings are tolerated") {
  TempDir dir("lcasc_ingest_cols");
  std::string train = dir.file("train.csv",
      "scene_label\tfilename\textra\r\n"
      "park\taudio/park-oslo-1-2-c.wav\tjunk\r\n");
  DatasetManifest m = parse_manifest(train, "", "");
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].scene == scene_index("park"));
  CHECK(m.entries[0].device == "c");
}

TEST_CASE("manifest errors carry line numbers") {
  TempDir dir("lcasc_ingest_errors");
  std::string bad_scene = dir.file("a.csv",
      "filename\tscene_label\n"
      "audio/park-oslo-1-2-a.wav\tpark\n"
      "audio/what-oslo-1-3-a.wav\tcathedral\n");
  try {
    parse_manifest(bad_scene, "", "");
    FAIL("unknown scene must not parse");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("cathedral") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
  }

  std::string bad_device = dir.file("b.csv",
      "filename\tscene_label\n"
      "audio/park-oslo-1-2-q9.wav\tpark\n");
  CHECK_THROWS_AS(parse_manifest(bad_device, "", ""), DataError);

  std::string dup = dir.file("c.csv",
      "filename\tscene_label\n"
      "audio/park-oslo-1-2-a.wav\tpark\n"
      "audio/park-oslo-1-2-a.wav\tpark\n");
  try {
    parse_manifest(dup, "", "");
    FAIL("duplicate path must not parse");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }

  std::string no_header = dir.file("d.csv", "park\taudio/x.wav\n");
  CHECK_THROWS_AS(parse_manifest(no_header, "", ""), DataError);
}

TEST_CASE("manifest ordering is input-order independent") {
  TempDir dir("lcasc_ingest_order");
  std::string fwd = dir.file("f.csv",
      "filename\tscene_label\n"
      "audio/bus-paris-1-1-a.wav\tbus\n"
      "audio/airport-rome-1-2-b.wav\tairport\n"
      "audio/tram-oslo-1-3-c.wav\ttram\n");
  std::string rev = dir.file("r.csv",
      "filename\tscene_label\n"
      "audio/tram-oslo-1-3-c.wav\ttram\n"
      "audio/airport-rome-1-2-b.wav\tairport\n"
      "audio/bus-paris-1-1-a.wav\tbus\n");
  DatasetManifest a = parse_manifest(fwd, "", "");
  DatasetManifest b = parse_manifest(rev, "", "");
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].file == b.entries[i].file);
    CHECK(a.entries[i].scene == b.entries[i].scene);
  }
  CHECK(a.entries[0].file < a.entries[1].file);
  CHECK(a.entries[1].file < a.entries[2].file);
}

TEST_CASE("header-only eval csv yields a train-only manifest") {
  TempDir dir("lcasc_ingest_trainonly");
  std::string train = dir.file("t.csv",
      "filename\tscene_label\n"
      "audio/bus-paris-1-1-a.wav\tbus\n");
  std::string eval = dir.file("e.csv", "filename\tscene_label\n");
  DatasetManifest m = parse_manifest(train, eval, "");
  CHECK(m.split(Split::Train).size() == 1);
  CHECK(m.split(Split::Eval).empty());
}

TEST_CASE("device histogram reproduces constructed counts") {
  TempDir dir("lcasc_ingest_hist");
  std::string train = dir.file("t.csv",
      "filename\tscene_label\n"
      "audio/bus-a-1-1-a.wav\tbus\n"
      "audio/bus-a-1-2-a.wav\tbus\n"
      "audio/bus-a-1-3-b.wav\tbus\n"
      "audio/bus-a-1-4-s1.wav\tbus\n");
  DatasetManifest m = parse_manifest(train, "", "");
  auto hist = m.device_histogram(Split::Train);
  CHECK(hist.at("a") == 2);
  CHECK(hist.at("b") == 1);
  CHECK(hist.at("s1") == 1);
  CHECK(hist.size() == 3);
}

TEST_CASE("config files parse with comments and overrides") {
  TempDir dir("lcasc_ingest_cfg");
  std::string path = dir.file("run.cfg",
      "# training setup\n"
      "epochs = 12\n"
      "lr=0.002\n"
      "\n"
      "mixup_dist=uniform\n"
      "data_root=/data/corpus   \n"
      "seed=99\n");
  RunConfig cfg = load_run_config(path);
  CHECK(cfg.train.epochs == 12);
  CHECK(cfg.train.lr == doctest::Approx(0.002));
  CHECK(cfg.augment.mixup_dist == MixupDist::Uniform);
  CHECK(cfg.data_root == "/data/corpus");
  CHECK(cfg.train.seed == 99);
  /* Untouched keys keep their defaults. */
  CHECK(cfg.train.batch_size == 100);
  CHECK(cfg.frontend.n_fft == 4096);

  apply_config_key(cfg, "epochs", "3");
  CHECK(cfg.train.epochs == 3);
}

TEST_CASE("config rejects unknown keys and malformed lines") {
  TempDir dir("lcasc_ingest_badcfg");
  RunConfig cfg;
  CHECK_THROWS_AS(apply_config_key(cfg, "warp_factor", "9"), UsageError);
  CHECK_THROWS_AS(apply_config_key(cfg, "epochs", "twelve"), UsageError);

  std::string bad = dir.file("bad.cfg", "epochs=1\nthis line has no equals\n");
  try {
    load_run_config(bad);
    FAIL("malformed line must not parse");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("synthetic corpus is self-consistent and parseable") {
  TempDir dir("lcasc_ingest_synth");
  SynthSpec spec;
  spec.classes = 3;
  spec.train_per_class = 4;
  spec.eval_per_class = 2;
  int n = write_synth_corpus(dir.str(), spec);
  CHECK(n == 3 * 6);

  DatasetManifest m = parse_manifest(dir.str("train.csv"), dir.str("evaluate.csv"),
                                     dir.str("meta.csv"));
  CHECK(m.entries.size() == 18);
  CHECK(m.split(Split::Train).size() == 12);
  CHECK(m.split(Split::Eval).size() == 6);
  for (const ManifestEntry& e : m.entries) {
    CHECK(fs::exists(dir.path / e.file));
    CHECK(e.scene < 3);
  }
  /* Eval rotation puts unseen devices in the eval split. */
  auto eval_hist = m.device_histogram(Split::Eval);
  CHECK(eval_hist.count("s4"));
}

TEST_CASE("synth clips differ by scene and are deterministic") {
  AudioClip a1 = synth_clip(0, "a", 5);
  AudioClip a2 = synth_clip(0, "a", 5);
  AudioClip b = synth_clip(1, "a", 5);
  CHECK(a1.samples == a2.samples);
  CHECK(a1.samples != b.samples);
  CHECK(int(a1.samples.size()) == 44100);
}

TEST_CASE("feature paths mirror the audio tree") {
  CHECK(feature_rel_path("audio/a-b-1-2-a.wav") == "audio/a-b-1-2-a.lcft");
  CHECK(feature_rel_path("x.wav") == "x.lcft");
  CHECK(feature_rel_path("dir.v2/clip.wav") == "dir.v2/clip.lcft");
}

TEST_CASE("extract corpus caches and re-runs are byte-identical") {
  TempDir dir("lcasc_ingest_extract");
  SynthSpec spec;
  spec.classes = 2;
  spec.train_per_class = 2;
  spec.eval_per_class = 0;
  write_synth_corpus(dir.str("corpus"), spec);

  FrontendConfig cfg;
  std::vector<FilterbankKind> kinds = {FilterbankKind::Mel, FilterbankKind::Cqt};
  int first = extract_corpus(dir.str("corpus"), kinds, dir.str("features"), cfg);
  CHECK(first == 8);

  std::string one = dir.str("features/mel/audio");
  REQUIRE(fs::is_directory(one));
  fs::path sample;
  for (const auto& e : fs::directory_iterator(one)) sample = e.path();
  std::string before = binio::read_file(sample.string());

  int second = extract_corpus(dir.str("corpus"), kinds, dir.str("features"), cfg);
  CHECK(second == 0);
  CHECK(binio::read_file(sample.string()) == before);

  DatasetManifest m = parse_manifest(dir.str("corpus/train.csv"), "", "");
  Tensor feat = load_feature(dir.str("features"), FilterbankKind::Mel,
                             m.entries.front().file);
  CHECK(feat.h == 128);
  CHECK(feat.w == 135);
  CHECK(feat.c == 3);
}

TEST_CASE("fit with zero epochs returns the seeded initialization") {
  TempDir dir("lcasc_ingest_fit");
  SynthSpec spec;
  spec.classes = 2;
  spec.train_per_class = 2;
  spec.eval_per_class = 1;
  write_synth_corpus(dir.str("corpus"), spec);

  FrontendConfig fcfg;
  extract_corpus(dir.str("corpus"), {FilterbankKind::Mel}, dir.str("features"), fcfg);
  DatasetManifest m = parse_manifest(dir.str("corpus/train.csv"),
                                     dir.str("corpus/evaluate.csv"),
                                     dir.str("corpus/meta.csv"));

  RunConfig cfg;
  cfg.train.epochs = 0;
  cfg.train.seed = 77;
  FitOutcome outcome = fit(m, FilterbankKind::Mel, ModelId::M1, true,
                           dir.str("features"), cfg, nullptr);
  CHECK(outcome.result.log.empty());

  Network fresh(make_model_spec(ModelId::M1, true), 77);
  auto pa = outcome.net->params(), pb = fresh.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->v == pb[i]->v);

  Scorer scorer = cached_scorer(*outcome.net, dir.str("features"),
                                FilterbankKind::Mel);
  ProbVector p = scorer(*m.split(Split::Eval).front());
  double sum = 0.0;
  for (double x : p.p) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit refuses an empty train split") {
  TempDir dir("lcasc_ingest_fitempty");
  std::string eval = dir.file("e.csv",
      "filename\tscene_label\n"
      "audio/bus-paris-1-1-a.wav\tbus\n");
  DatasetManifest m = parse_manifest("", eval, "");
  RunConfig cfg;
  CHECK_THROWS_WITH_AS(fit(m, FilterbankKind::Mel, ModelId::M1, true,
                           dir.str("features"), cfg, nullptr),
                       "empty train split", DataError);
}

TEST_CASE("load_feature checks the cached filterbank kind") {
  TempDir dir("lcasc_ingest_kind");
  SynthSpec spec;
  spec.classes = 1;
  spec.train_per_class = 1;
  spec.eval_per_class = 0;
  write_synth_corpus(dir.str("corpus"), spec);
  FrontendConfig cfg;
  extract_corpus(dir.str("corpus"), {FilterbankKind::Mel}, dir.str("features"), cfg);

  /* The mel tree holds mel tensors; asking for cqt through it must fail on
   * the missing tree, and a copied-in wrong-kind file must fail the check. */
  fs::path mel_file;
  for (const auto& e : fs::recursive_directory_iterator(dir.str("features"))) {
    if (e.is_regular_file()) mel_file = e.path();
  }
  fs::path cqt_dir = dir.path / "features" / "cqt" / "audio";
  fs::create_directories(cqt_dir);
  fs::copy_file(mel_file, cqt_dir / mel_file.filename());

  std::string rel = "audio/" + mel_file.filename().string();
  rel = rel.substr(0, rel.size() - 5) + ".wav";
  CHECK_THROWS_AS(load_feature(dir.str("features"), FilterbankKind::Cqt, rel),
                  DataError);
}
