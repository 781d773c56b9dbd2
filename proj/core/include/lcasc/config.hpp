#pragma once

#include <string>

#include "lcasc/augment.hpp"
#include "lcasc/frontend.hpp"
#include "lcasc/train.hpp"

namespace lcasc {

/* Flat run configuration shared by the CLI subcommands. Loaded from a
 * key=value file; command-line flags override file values. */
struct RunConfig {
  FrontendConfig frontend;
  AugmentConfig augment;
  TrainConfig train;

  std::string data_root;
  std::string feature_dir;
  std::string model_dir;
  std::string report_path;
  std::string train_tsv;
  std::string eval_tsv;
  std::string meta_tsv;
};

/* Applies one key=value pair. Unknown keys and unparsable values are
 * usage errors naming the key. */
void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value);

/* Parses a file of `key=value` lines; `#` starts a comment, blank lines are
 * ignored. */
RunConfig load_run_config(const std::string& path);

}  // namespace lcasc
