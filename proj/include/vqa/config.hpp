#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vqa/losses.hpp"
#include "vqa/model.hpp"

namespace vqa {

struct DataConfig {
  std::string manifest;       // training manifest
  std::string eval_manifest;  // optional held-out manifest; empty: split below
  std::string vmaf_scores;    // optional scores file ingested before training
  double split = 0.8;         // train fraction of the manifest (1.0: eval on train)
  int frame_count = 8;
};

struct TrainParams {
  int batch_size = 8;
  double lr0 = 1e-4;
  double lr_decay = 0.95;
  int epochs = 50;
  std::uint64_t seed = 1;
  int eval_every = 5;
  std::string checkpoint_dir = "runs";
  int steps_per_epoch = 0;  // 0: records / batch_size, at least 1
  double grad_clip = 10.0;
  bool grad_clip_enabled = true;
  bool plcc_logistic = false;
};

// Every tunable of the toolkit. Defaults are the constructed values; a config
// file overrides defaults and command-line key=value pairs override the file.
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  LossConfig loss;
  bool margin_auto = true;  // margin = 0.05 * label scale range at train time
  TrainParams train;

  void validate() const;
  double resolve_margin(double label_range) const;
};

// Applies "dotted.key=value" pairs on top of the current values.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

// YAML file (nested or flat dotted keys) + overrides. Unknown keys are
// rejected.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// One line per key: name, default, description.
std::string config_help();

// Full key=value snapshot of a config, and its inverse. Checkpoints embed a
// snapshot so scoring needs no separate config file.
std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& cfg);
RunConfig config_from_snapshot(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace vqa
