#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lcasc/config.hpp"
#include "lcasc/errors.hpp"
#include "lcasc/features.hpp"
#include "lcasc/fusion.hpp"
#include "lcasc/gradcheck.hpp"
#include "lcasc/manifest.hpp"
#include "lcasc/pipeline.hpp"
#include "lcasc/quant.hpp"
#include "lcasc/synth.hpp"
#include "lcasc/train.hpp"

namespace {

using namespace lcasc;

constexpr size_t kEnsembleBudgetBytes = 128000;

RunConfig make_config(const std::string& config_path,
                      const std::vector<std::string>& sets) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);
  for (const std::string& kv : sets) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--set expects key=value, got '" + kv + "'");
    }
    apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(s);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

FilterbankKind kind_from_name(const std::string& name) {
  if (name == "mel") return FilterbankKind::Mel;
  if (name == "gam") return FilterbankKind::Gammatone;
  if (name == "cqt") return FilterbankKind::Cqt;
  throw UsageError("unknown filterbank '" + name + "', expected mel|gam|cqt");
}

DatasetManifest manifest_from_config(const RunConfig& cfg, bool need_train,
                                     bool need_eval) {
  if (need_train && cfg.train_tsv.empty()) {
    throw UsageError("no train list configured (set train_tsv)");
  }
  if (need_eval && cfg.eval_tsv.empty()) {
    throw UsageError("no eval list configured (set eval_tsv)");
  }
  return parse_manifest(cfg.train_tsv, cfg.eval_tsv, cfg.meta_tsv);
}

int cmd_extract(const RunConfig& cfg, const std::string& features) {
  if (cfg.data_root.empty()) throw UsageError("extract needs data_root");
  if (cfg.feature_dir.empty()) throw UsageError("extract needs feature_dir");
  std::vector<FilterbankKind> kinds;
  for (const std::string& name : split_commas(features)) {
    kinds.push_back(kind_from_name(name));
  }
  if (kinds.empty()) throw UsageError("extract needs at least one filterbank");
  int written = extract_corpus(cfg.data_root, kinds, cfg.feature_dir,
                               cfg.frontend);
  std::cout << "extracted n=" << written << " out=" << cfg.feature_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& feature,
              const std::string& model, bool decomposed,
              const std::string& out) {
  if (cfg.feature_dir.empty()) throw UsageError("train needs feature_dir");
  FilterbankKind kind = kind_from_name(feature);
  ModelId id = model_id_from_name(model);

  std::string out_path = out;
  if (out_path.empty()) {
    if (cfg.model_dir.empty()) {
      throw UsageError("train needs --out or model_dir");
    }
    out_path = (std::filesystem::path(cfg.model_dir) /
                (std::string(model_name(id)) + "_" + feature + ".lcas"))
                   .string();
  }

  DatasetManifest manifest = manifest_from_config(cfg, true, false);
  std::ostringstream log;
  FitOutcome outcome =
      fit(manifest, kind, id, decomposed, cfg.feature_dir, cfg, &log);
  std::cout << log.str();

  save_model(out_path, snapshot_f32(*outcome.net));
  std::ofstream(out_path + ".log") << log.str();
  std::cout << "checkpoint=" << out_path << "\n";
  return 0;
}

int cmd_quantize(const std::string& in, const std::string& out) {
  ModelFile f32 = load_model(in);
  ModelFile i8 = quantize_model(f32);
  save_model(out, i8);
  size_t in_bytes = serialize(f32).size();
  size_t out_bytes = serialize(i8).size();
  std::cout << "in=" << in_bytes << " out=" << out_bytes << " ratio="
            << std::fixed << std::setprecision(3)
            << double(out_bytes) / double(in_bytes) << "\n";
  return 0;
}

int cmd_size_report(const std::vector<std::string>& model_paths,
                    const std::string& report_path) {
  if (model_paths.empty()) throw UsageError("size-report needs --models");

  std::ostringstream out;
  size_t total = 0;
  for (const std::string& path : model_paths) {
    ModelFile mf = load_model(path);
    size_t bytes = std::filesystem::file_size(path);
    total += bytes;
    out << "model=" << model_name(mf.id) << " file=" << path
        << " bytes=" << bytes << " kb=" << std::fixed << std::setprecision(1)
        << double(bytes) / 1000.0 << "\n";
  }
  out << "total bytes=" << total << " kb=" << std::fixed
      << std::setprecision(1) << double(total) / 1000.0
      << " budget=" << kEnsembleBudgetBytes << "\n";

  std::cout << out.str();
  if (!report_path.empty()) std::ofstream(report_path) << out.str();
  if (total >= kEnsembleBudgetBytes) {
    throw BudgetError("ensemble is " + std::to_string(total) +
                      " bytes, budget " +
                      std::to_string(kEnsembleBudgetBytes));
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg,
                 const std::vector<std::string>& model_paths,
                 const std::string& features, const std::string& fusion) {
  if (fusion != "prod") {
    throw UsageError("unknown fusion '" + fusion + "', expected prod");
  }
  if (cfg.feature_dir.empty()) throw UsageError("evaluate needs feature_dir");
  std::vector<std::string> kind_names = split_commas(features);
  if (model_paths.empty()) throw UsageError("evaluate needs --models");
  if (kind_names.size() != model_paths.size()) {
    throw UsageError("--models and --features must pair up one to one");
  }

  DatasetManifest manifest = manifest_from_config(cfg, false, true);
  if (manifest.split(Split::Eval).empty()) {
    throw DataError("eval split is empty");
  }

  std::vector<Network> nets;
  nets.reserve(model_paths.size());
  for (const std::string& path : model_paths) {
    nets.push_back(instantiate(load_model(path)));
  }
  std::vector<Scorer> scorers;
  for (size_t i = 0; i < nets.size(); ++i) {
    scorers.push_back(cached_scorer(nets[i], cfg.feature_dir,
                                    kind_from_name(kind_names[i])));
  }

  EvalReport report = evaluate(manifest, scorers);
  std::cout << report.to_records();
  if (!cfg.report_path.empty()) {
    std::ofstream(cfg.report_path) << report.to_text();
    std::cout << "report=" << cfg.report_path << "\n";
  } else {
    std::cout << report.to_text();
  }
  return 0;
}

int cmd_selftest() {
  bool all_ok = true;
  for (uint64_t seed : {1u, 2u, 3u}) {
    for (const SuiteLine& line : layer_suite(seed)) {
      all_ok = all_ok && line.ok;
      std::cout << (line.ok ? "[ok]  " : "[FAIL] ") << "grad " << line.name
                << " seed=" << seed << " max_rel_err=" << std::scientific
                << std::setprecision(2) << line.result.max_rel_err
                << std::defaultfloat << " checks=" << line.result.checks
                << "\n";
    }
  }
  {
    Network net(make_model_spec(ModelId::M1, true), 11);
    Rng rng(12);
    Tensor x(2, 32, 32, 3);
    for (double& v : x.v) v = rng.uniform(-1.0, 1.0);
    GradCheckResult res = check_network(net, x, {3, 7}, 1e-4, 13, 2);
    bool ok = res.max_rel_err <= 1e-3;
    all_ok = all_ok && ok;
    std::cout << (ok ? "[ok]  " : "[FAIL] ")
              << "grad m1 end-to-end max_rel_err=" << std::scientific
              << std::setprecision(2) << res.max_rel_err << std::defaultfloat
              << " checks=" << res.checks << "\n";
  }
  {
    Rng rng(21);
    std::vector<double> w(64);
    for (double& x : w) x = rng.uniform(-2.0, 2.0);
    QuantizedTensor qt = quantize_tensor("t", {64}, w);
    std::vector<double> back = dequantize(qt);
    bool ok = true;
    for (size_t i = 0; i < w.size(); ++i) {
      ok = ok && std::fabs(w[i] - back[i]) <= double(qt.scale) / 2.0 + 1e-12;
    }
    all_ok = all_ok && ok;
    std::cout << (ok ? "[ok]  " : "[FAIL] ")
              << "quantize roundtrip within scale/2\n";
  }
  {
    Rng rng(22);
    Tensor logits(3, 1, 1, 10);
    for (double& v : logits.v) v = rng.uniform(-30.0, 30.0);
    Tensor p = softmax(logits);
    bool ok = true;
    for (int n = 0; n < p.n; ++n) {
      double sum = 0.0;
      for (int c = 0; c < p.c; ++c) {
        ok = ok && p.at(n, 0, 0, c) > 0.0;
        sum += p.at(n, 0, 0, c);
      }
      ok = ok && std::fabs(sum - 1.0) < 1e-12;
    }
    all_ok = all_ok && ok;
    std::cout << (ok ? "[ok]  " : "[FAIL] ") << "softmax simplex\n";
  }
  if (!all_ok) throw Error("selftest failed");
  std::cout << "selftest passed\n";
  return 0;
}

int cmd_synth(const std::string& out, const SynthSpec& spec) {
  if (out.empty()) throw UsageError("synth needs --out");
  int n = write_synth_corpus(out, spec);
  std::cout << "clips=" << n << " root=" << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-complexity acoustic scene classification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value configuration file")
      ->capture_default_str();
  app.add_option("--set", sets, "override one config key (key=value)");

  auto* extract = app.add_subcommand("extract", "Cache filterbank features");
  std::string ex_features = "mel,gam,cqt";
  std::string ex_root, ex_out;
  extract->add_option("--features", ex_features, "mel,gam,cqt subset");
  extract->add_option("--data-root", ex_root, "corpus root with .wav files");
  extract->add_option("--out", ex_out, "feature cache directory");

  auto* train = app.add_subcommand("train", "Fit one model on cached features");
  std::string tr_feature = "mel", tr_model = "m1", tr_out;
  bool tr_decomposed = false;
  train->add_option("--feature", tr_feature, "mel|gam|cqt");
  train->add_option("--model", tr_model, "m1|m2|m3");
  train->add_flag("--decomposed", tr_decomposed, "use decomposed convolutions");
  train->add_option("--out", tr_out, "checkpoint path (.lcas)");

  auto* quantize = app.add_subcommand("quantize", "Pack a checkpoint to int8");
  std::string q_in, q_out;
  quantize->add_option("--in", q_in, "fp32 checkpoint")->required();
  quantize->add_option("--out", q_out, "int8 output")->required();

  auto* size_report =
      app.add_subcommand("size-report", "Audit ensemble size against budget");
  std::string sr_models, sr_report;
  size_report->add_option("--models", sr_models, "comma-separated .lcas files");
  size_report->add_option("--report", sr_report, "also write the table here");

  auto* evaluate = app.add_subcommand("evaluate", "Score the eval split");
  std::string ev_models, ev_features, ev_fusion = "prod";
  evaluate->add_option("--models", ev_models, "comma-separated .lcas files");
  evaluate->add_option("--features", ev_features,
                       "filterbank per model, comma-separated");
  evaluate->add_option("--fusion", ev_fusion, "fusion rule (prod)");

  auto* selftest =
      app.add_subcommand("selftest", "Run gradient and invariant checks");

  auto* synth = app.add_subcommand("synth", "Write a labeled synthetic corpus");
  std::string sy_out;
  SynthSpec sy_spec;
  synth->add_option("--out", sy_out, "corpus root to create");
  synth->add_option("--classes", sy_spec.classes, "scene classes to cover");
  synth->add_option("--train-per-class", sy_spec.train_per_class,
                    "train clips per class");
  synth->add_option("--eval-per-class", sy_spec.eval_per_class,
                    "eval clips per class");
  synth->add_option("--seed", sy_spec.seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunConfig cfg = make_config(config_path, sets);
    if (extract->parsed()) {
      if (!ex_root.empty()) cfg.data_root = ex_root;
      if (!ex_out.empty()) cfg.feature_dir = ex_out;
      return cmd_extract(cfg, ex_features);
    }
    if (train->parsed()) {
      return cmd_train(cfg, tr_feature, tr_model, tr_decomposed, tr_out);
    }
    if (quantize->parsed()) return cmd_quantize(q_in, q_out);
    if (size_report->parsed()) {
      return cmd_size_report(split_commas(sr_models), sr_report);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(cfg, split_commas(ev_models), ev_features,
                          ev_fusion);
    }
    if (selftest->parsed()) return cmd_selftest();
    if (synth->parsed()) return cmd_synth(sy_out, sy_spec);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
