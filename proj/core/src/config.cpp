#include "lcasc/config.hpp"

#include <algorithm>
#include <fstream>

#include "lcasc/errors.hpp"

namespace lcasc {

namespace {

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int x = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config: bad integer for '" + key + "': " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw UsageError("config: bad number for '" + key + "': " + value);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return uint64_t(x);
  } catch (const std::exception&) {
    throw UsageError("config: bad integer for '" + key + "': " + value);
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "n_fft") cfg.frontend.n_fft = parse_int(key, value);
  else if (key == "window_len") cfg.frontend.window_len = parse_int(key, value);
  else if (key == "hop") cfg.frontend.hop = parse_int(key, value);
  else if (key == "n_filters") cfg.frontend.n_filters = parse_int(key, value);
  else if (key == "target_frames") cfg.frontend.target_frames = parse_int(key, value);
  else if (key == "log_floor") cfg.frontend.log_floor = parse_double(key, value);
  else if (key == "delta_width") cfg.frontend.delta_width = parse_int(key, value);
  else if (key == "crop_target") cfg.augment.crop_target = parse_int(key, value);
  else if (key == "erase_bins") cfg.augment.erase_bins = parse_int(key, value);
  else if (key == "erase_axis_prob") cfg.augment.erase_axis_prob = parse_double(key, value);
  else if (key == "mixup_dist") {
    if (value == "beta") cfg.augment.mixup_dist = MixupDist::Beta;
    else if (value == "uniform") cfg.augment.mixup_dist = MixupDist::Uniform;
    else throw UsageError("config: mixup_dist must be beta or uniform, got " + value);
  }
  else if (key == "mixup_alpha") cfg.augment.alpha = parse_double(key, value);
  else if (key == "batch_size") cfg.train.batch_size = parse_int(key, value);
  else if (key == "l2") cfg.train.l2 = parse_double(key, value);
  else if (key == "lr") cfg.train.lr = parse_double(key, value);
  else if (key == "epochs") cfg.train.epochs = parse_int(key, value);
  else if (key == "seed") cfg.train.seed = parse_u64(key, value);
  else if (key == "stop_at_acc") cfg.train.stop_at_acc = parse_double(key, value);
  else if (key == "data_root") cfg.data_root = value;
  else if (key == "feature_dir") cfg.feature_dir = value;
  else if (key == "model_dir") cfg.model_dir = value;
  else if (key == "report_path") cfg.report_path = value;
  else if (key == "train_tsv") cfg.train_tsv = value;
  else if (key == "eval_tsv") cfg.eval_tsv = value;
  else if (key == "meta_tsv") cfg.meta_tsv = value;
  else throw UsageError("config: unknown key '" + key + "'");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path);

  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config: line " + std::to_string(line_no) +
                       " is not key=value");
    }
    apply_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace lcasc
