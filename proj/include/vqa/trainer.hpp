#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "vqa/batch.hpp"
#include "vqa/checkpoint.hpp"
#include "vqa/config.hpp"
#include "vqa/metrics.hpp"

namespace vqa {

// Closed-form exponential schedule: lr0 * decay^epoch.
double lr_schedule(double lr0, double decay, int epoch);

struct StepRecord {
  int epoch = 0;
  long step = 0;
  double lr = 0.0;
  LossBreakdown loss;
  std::vector<std::string> batch_ids;  // batch order, group A first
  double grad_norm = 0.0;
};

// Owns the model, the optimizer, the data splits, and a frozen-feature cache.
// One Trainer is one reproducible run: every batch draw derives from
// (train.seed, epoch, step).
class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);       // loads data per cfg.data
  Trainer(const RunConfig& cfg, Manifest manifest);  // injected corpus

  const RunConfig& config() const { return cfg_; }
  VqaModel& model() { return *model_; }
  Adam& optimizer() { return adam_; }
  TrainState& state() { return state_; }
  const LossConfig& effective_loss() const { return loss_; }
  const std::vector<VideoRecord>& train_records() const { return train_; }
  const std::vector<VideoRecord>& eval_records() const { return eval_; }
  bool eval_is_train() const { return eval_is_train_; }

  // One pass of steps_per_epoch contrastive batches with Adam updates.
  std::vector<StepRecord> train_epoch();

  EvalReport evaluate(const std::vector<VideoRecord>& records);
  EvalReport evaluate_eval_split() { return evaluate(eval_); }

  double predict_record(const VideoRecord& record);

  struct RunResult {
    EvalReport final_report;
    std::filesystem::path last_checkpoint;
    std::filesystem::path best_checkpoint;  // empty when never improved
  };
  // Full protocol: epochs, periodic evaluation, JSONL step/eval logs, and
  // checkpoints under cfg.train.checkpoint_dir.
  RunResult run();

 private:
  void prepare(Manifest manifest);
  const std::vector<VqaModel::CachedFrame>& cached_frames(const VideoRecord& record);
  int steps_per_epoch() const;

  RunConfig cfg_;
  LabelScale scale_;
  std::vector<VideoRecord> train_, eval_;
  bool eval_is_train_ = false;
  std::unique_ptr<VqaModel> model_;
  Adam adam_;
  TrainState state_;
  LossConfig loss_;
  std::unordered_map<std::string, std::vector<VqaModel::CachedFrame>> frame_cache_;
  std::unordered_map<std::string, bool> pad_flags_;
};

struct AblationArm {
  std::string name;
  LossConfig loss;
  EvalReport report;
  std::vector<std::vector<std::string>> batch_order;  // per training step
};

struct AblationResult {
  AblationArm full;      // the configured loss
  AblationArm baseline;  // lambda1 = lambda2 = 0
};

// Two seeded runs differing only in the loss weights.
AblationResult run_ablation(const RunConfig& cfg);
AblationResult run_ablation(const RunConfig& cfg, const Manifest& manifest);

}  // namespace vqa
