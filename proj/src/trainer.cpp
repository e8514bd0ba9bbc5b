#include "vqa/trainer.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vqa/errors.hpp"
#include "vqa/frames.hpp"
#include "vqa/losses.hpp"
#include "vqa/rng.hpp"

namespace vqa {

namespace {

constexpr std::uint64_t kSplitStream = 0x517;

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + ids[i];
  return s;
}

void require_labeled(const std::vector<VideoRecord>& records, const char* which) {
  std::vector<std::string> missing;
  for (const auto& r : records) {
    if (!r.label.has_value()) missing.push_back(r.video_id);
  }
  if (!missing.empty()) {
    if (missing.size() > 4) missing.resize(4);
    throw DataError("data", std::string(which) + " split has unlabeled records (e.g. " +
                                join_ids(missing) + "); ingest VMAF scores or fill the label column");
  }
}

nlohmann::json step_to_json(const StepRecord& r) {
  return {{"epoch", r.epoch},    {"step", r.step},        {"lr", r.lr},
          {"mse", r.loss.mse},   {"l1", r.loss.l1},       {"gc", r.loss.gc},
          {"rank", r.loss.rank}, {"total", r.loss.total}, {"grad_norm", r.grad_norm},
          {"batch", r.batch_ids}};
}

nlohmann::json report_to_json(const EvalReport& r) {
  return {{"n", r.n},
          {"srocc", r.srocc_defined ? nlohmann::json(r.srocc) : nlohmann::json()},
          {"plcc", r.plcc_defined ? nlohmann::json(r.plcc) : nlohmann::json()},
          {"srocc_defined", r.srocc_defined},
          {"plcc_defined", r.plcc_defined},
          {"logistic_fit_applied", r.logistic_fit_applied}};
}

Manifest load_training_data(const DataConfig& data) {
  // Dataset files that cannot be opened are a data-stage failure for the
  // harness, whatever the low-level cause.
  try {
    Manifest m = load_manifest(data.manifest);
    if (!data.vmaf_scores.empty()) ingest_vmaf_scores(data.vmaf_scores, m.records, m.scale);
    return m;
  } catch (const IoError& e) {
    throw DataError(e.stage(), std::string(e.what()).substr(e.stage().size() + 2));
  }
}

}  // namespace

double lr_schedule(double lr0, double decay, int epoch) {
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("train", "decay must be in (0, 1)");
  if (!(lr0 >= 0.0)) throw ConfigError("train", "lr0 must be >= 0");
  if (epoch < 0) throw ConfigError("train", "epoch must be >= 0");
  return lr0 * std::pow(decay, static_cast<double>(epoch));
}

Trainer::Trainer(const RunConfig& cfg)
    : cfg_(cfg), model_(std::make_unique<VqaModel>(cfg.model)), adam_(model_->params()) {
  cfg_.validate();
  prepare(load_training_data(cfg_.data));
}

Trainer::Trainer(const RunConfig& cfg, Manifest manifest)
    : cfg_(cfg), model_(std::make_unique<VqaModel>(cfg.model)), adam_(model_->params()) {
  cfg_.validate();
  prepare(std::move(manifest));
}

void Trainer::prepare(Manifest manifest) {
  scale_ = manifest.scale;
  loss_ = cfg_.loss;
  loss_.margin = cfg_.resolve_margin(scale_.range());
  loss_.validate();

  if (!cfg_.data.eval_manifest.empty()) {
    train_ = std::move(manifest.records);
    Manifest held_out;
    try {
      held_out = load_manifest(cfg_.data.eval_manifest);
    } catch (const IoError& e) {
      throw DataError(e.stage(), std::string(e.what()).substr(e.stage().size() + 2));
    }
    if (held_out.scale.kind != scale_.kind) {
      throw DataError("data", "eval manifest label scale differs from the training scale");
    }
    eval_ = std::move(held_out.records);
  } else if (cfg_.data.split >= 1.0) {
    train_ = manifest.records;
    eval_ = std::move(manifest.records);
    eval_is_train_ = true;
  } else {
    auto records = std::move(manifest.records);
    Rng rng(Rng::mix(cfg_.train.seed, kSplitStream));
    rng.shuffle(records);
    const auto k = static_cast<std::size_t>(
        std::max<long>(1, std::lround(cfg_.data.split * static_cast<double>(records.size()))));
    if (k >= records.size()) {
      train_ = std::move(records);
      eval_ = train_;
      eval_is_train_ = true;
    } else {
      train_.assign(records.begin(), records.begin() + static_cast<long>(k));
      eval_.assign(records.begin() + static_cast<long>(k), records.end());
    }
  }

  if (train_.empty()) throw DataError("data", "training split is empty");
  require_labeled(train_, "train");
  require_labeled(eval_, "eval");
  state_.lr = lr_schedule(cfg_.train.lr0, cfg_.train.lr_decay, 0);
  state_.batch_seed = cfg_.train.seed;
}

const std::vector<VqaModel::CachedFrame>& Trainer::cached_frames(const VideoRecord& record) {
  const auto it = frame_cache_.find(record.video_id);
  if (it != frame_cache_.end()) return it->second;
  const auto sampled =
      sample_frames(record, cfg_.data.frame_count, cfg_.model.spatial.input_size);
  pad_flags_[record.video_id] = sampled.padded;
  return frame_cache_[record.video_id] = model_->cache_frames(sampled.frames);
}

int Trainer::steps_per_epoch() const {
  if (cfg_.train.steps_per_epoch > 0) return cfg_.train.steps_per_epoch;
  return std::max<int>(1, static_cast<int>(train_.size()) / cfg_.train.batch_size);
}

std::vector<StepRecord> Trainer::train_epoch() {
  const int steps = steps_per_epoch();
  const double lr = lr_schedule(cfg_.train.lr0, cfg_.train.lr_decay, state_.epoch);
  state_.lr = lr;

  std::vector<StepRecord> records;
  records.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    const std::uint64_t seed = Rng::mix(cfg_.train.seed, static_cast<std::uint64_t>(state_.epoch),
                                        static_cast<std::uint64_t>(s));
    auto batch = build_contrastive_batch(train_, cfg_.train.batch_size, loss_.p, seed);

    ad::Graph graph;
    ParamBinding ctx(graph, model_->params());
    std::vector<ad::Var> scores, videos, frames;
    Eigen::VectorXd labels(batch.n);
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(batch.n));
    for (int i = 0; i < batch.n; ++i) {
      const auto& rec = batch.samples[static_cast<std::size_t>(i)].record;
      ids.push_back(rec.video_id);
      labels[i] = rec.label.value();
      const auto nodes = model_->forward_cached(ctx, cached_frames(rec));
      scores.push_back(nodes.score);
      videos.push_back(nodes.video_embedding);
      if (loss_.gc_level == GcLevel::frame) frames.push_back(nodes.frame_embeddings);
    }

    ad::Var predictions = ad::concat_rows(scores);
    ad::Var embeddings = ad::concat_rows(videos);
    ad::Var gc_input;  // default: video embeddings
    if (loss_.gc_level == GcLevel::frame) gc_input = ad::concat_rows(frames);

    const auto nodes = lossgraph::total_loss(embeddings, predictions, labels, loss_, gc_input);
    const LossBreakdown breakdown = nodes.breakdown();
    if (!std::isfinite(breakdown.total)) {
      throw NumericError("train", "non-finite loss at step " + std::to_string(state_.step) +
                                      "; batch: " + join_ids(ids));
    }

    graph.backward(nodes.total);
    StepRecord rec;
    rec.grad_norm =
        adam_.step(ctx, lr, cfg_.train.grad_clip_enabled ? cfg_.train.grad_clip : 0.0);
    ++state_.step;
    rec.epoch = state_.epoch;
    rec.step = state_.step;
    rec.lr = lr;
    rec.loss = breakdown;
    rec.batch_ids = std::move(ids);
    records.push_back(std::move(rec));
  }

  ++state_.epoch;
  state_.lr = lr_schedule(cfg_.train.lr0, cfg_.train.lr_decay, state_.epoch);
  return records;
}

double Trainer::predict_record(const VideoRecord& record) {
  ad::Graph graph;
  ParamBinding ctx(graph, model_->params());
  return model_->forward_cached(ctx, cached_frames(record)).score.scalar();
}

EvalReport Trainer::evaluate(const std::vector<VideoRecord>& records) {
  if (records.empty()) throw DataError("evaluate", "empty evaluation split");
  require_labeled(records, "evaluation");

  std::vector<double> predictions, labels;
  predictions.reserve(records.size());
  for (const auto& rec : records) {
    predictions.push_back(predict_record(rec));
    labels.push_back(rec.label.value());
  }

  EvalReport report;
  report.n = static_cast<int>(records.size());
  if (report.n < 2) return report;  // correlations undefined below two samples
  try {
    report.srocc = srocc(predictions, labels);
    report.srocc_defined = true;
  } catch (const UndefinedCorrelationError&) {
    report.srocc_defined = false;
  }
  try {
    const auto r = plcc_detailed(predictions, labels, cfg_.train.plcc_logistic);
    report.plcc = r.value;
    report.plcc_defined = true;
    report.logistic_fit_applied = r.logistic_applied;
  } catch (const UndefinedCorrelationError&) {
    report.plcc_defined = false;
  }
  return report;
}

Trainer::RunResult Trainer::run() {
  const std::filesystem::path dir = cfg_.train.checkpoint_dir;
  std::filesystem::create_directories(dir);
  std::ofstream step_log(dir / "train_log.jsonl", std::ios::trunc);
  std::ofstream eval_log(dir / "eval_log.jsonl", std::ios::trunc);
  if (!step_log || !eval_log) throw IoError("train", "cannot write logs under " + dir.string());

  RunResult result;
  result.last_checkpoint = dir / "last.ckpt";
  const std::filesystem::path best_path = dir / "best.ckpt";

  for (int epoch = 0; epoch < cfg_.train.epochs; ++epoch) {
    for (const auto& rec : train_epoch()) step_log << step_to_json(rec).dump() << "\n";
    step_log.flush();

    const bool last = (epoch + 1 == cfg_.train.epochs);
    if ((epoch + 1) % cfg_.train.eval_every == 0 || last) {
      const EvalReport report = evaluate_eval_split();
      nlohmann::json j = report_to_json(report);
      j["epoch"] = epoch;
      j["split"] = eval_is_train_ ? "train" : "eval";
      eval_log << j.dump() << "\n";
      eval_log.flush();
      if (report.srocc_defined && report.srocc > state_.best_srocc) {
        state_.best_srocc = report.srocc;
        save_checkpoint(best_path, *model_, &adam_, state_, cfg_);
        result.best_checkpoint = best_path;
      }
      save_checkpoint(result.last_checkpoint, *model_, &adam_, state_, cfg_);
      if (last) result.final_report = report;
    }
  }
  return result;
}

AblationResult run_ablation(const RunConfig& cfg) {
  return run_ablation(cfg, load_training_data(cfg.data));
}

AblationResult run_ablation(const RunConfig& cfg, const Manifest& manifest) {
  AblationResult result;
  result.full.name = "gc_rank";
  result.baseline.name = "no_gc_rank";

  for (AblationArm* arm : {&result.full, &result.baseline}) {
    RunConfig arm_cfg = cfg;
    if (arm == &result.baseline) {
      arm_cfg.loss.lambda1 = 0.0;
      arm_cfg.loss.lambda2 = 0.0;
    }
    Trainer trainer(arm_cfg, manifest);
    arm->loss = trainer.effective_loss();
    for (int epoch = 0; epoch < arm_cfg.train.epochs; ++epoch) {
      for (auto& rec : trainer.train_epoch()) arm->batch_order.push_back(std::move(rec.batch_ids));
    }
    arm->report = trainer.evaluate_eval_split();
  }
  return result;
}

}  // namespace vqa
