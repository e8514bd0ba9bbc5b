#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "vqa/checkpoint.hpp"
#include "vqa/errors.hpp"
#include "vqa/frames.hpp"
#include "vqa/trainer.hpp"

namespace {

constexpr int kExitPartial = 10;  // some score targets failed, some succeeded

std::string fmt_metric(double v, bool defined) {
  if (!defined) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

nlohmann::json report_json(const vqa::EvalReport& r) {
  return {{"n", r.n},
          {"srocc", r.srocc_defined ? nlohmann::json(r.srocc) : nlohmann::json()},
          {"plcc", r.plcc_defined ? nlohmann::json(r.plcc) : nlohmann::json()},
          {"srocc_defined", r.srocc_defined},
          {"plcc_defined", r.plcc_defined},
          {"logistic_fit_applied", r.logistic_fit_applied}};
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  const auto cfg = vqa::load_config(config_path, overrides);
  vqa::Trainer trainer(cfg);
  const auto result = trainer.run();
  std::cout << "train: done; epochs=" << cfg.train.epochs
            << " final_srocc=" << fmt_metric(result.final_report.srocc, result.final_report.srocc_defined)
            << " final_plcc=" << fmt_metric(result.final_report.plcc, result.final_report.plcc_defined)
            << " checkpoint=" << result.last_checkpoint.string() << "\n";
  return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint_path,
             const std::vector<std::string>& overrides, const std::string& output_path) {
  const auto cfg = vqa::load_config(config_path, overrides);
  vqa::Trainer trainer(cfg);
  vqa::load_checkpoint(checkpoint_path, trainer.model(), nullptr);
  const auto report = trainer.evaluate_eval_split();

  nlohmann::json j = report_json(report);
  j["checkpoint"] = checkpoint_path;
  j["split"] = trainer.eval_is_train() ? "train" : "eval";
  std::cout << j.dump() << "\n";
  if (!output_path.empty()) {
    std::ofstream out(output_path);
    if (!out) throw vqa::IoError("eval", "cannot write " + output_path);
    out << j.dump() << "\n";
  }
  return 0;
}

int run_score(const std::string& checkpoint_path, const std::vector<std::string>& videos,
              int frame_override) {
  const auto bundle = vqa::load_for_scoring(checkpoint_path);
  const int frame_count = frame_override > 0 ? frame_override : bundle.cfg.data.frame_count;

  int ok = 0, failed = 0;
  for (const auto& path : videos) {
    vqa::VideoRecord rec;
    rec.video_id = std::filesystem::path(path).stem().string();
    rec.source_path = path;
    try {
      const auto sampled =
          vqa::sample_frames(rec, frame_count, bundle.cfg.model.spatial.input_size);
      const double score = bundle.model->predict(sampled.frames);
      std::cout << rec.video_id << "\t" << score << "\n";
      ++ok;
    } catch (const vqa::Error& e) {
      std::cerr << "vqa: score: " << path << ": " << e.what() << "\n";
      ++failed;
    }
  }
  if (failed == 0) return 0;
  if (ok > 0) return kExitPartial;
  return static_cast<int>(vqa::ErrorCategory::data);
}

int run_ablate(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& output_dir) {
  const auto cfg = vqa::load_config(config_path, overrides);
  const auto result = vqa::run_ablation(cfg);

  std::ostringstream table;
  table << "method\tplcc\tsrocc\tn\n";
  for (const auto* arm : {&result.full, &result.baseline}) {
    table << arm->name << "\t" << fmt_metric(arm->report.plcc, arm->report.plcc_defined) << "\t"
          << fmt_metric(arm->report.srocc, arm->report.srocc_defined) << "\t" << arm->report.n
          << "\n";
  }
  std::cout << table.str();

  if (!output_dir.empty()) {
    std::filesystem::create_directories(output_dir);
    const auto dir = std::filesystem::path(output_dir);
    std::ofstream tsv(dir / "ablation.tsv");
    tsv << table.str();
    for (const auto* arm : {&result.full, &result.baseline}) {
      std::ofstream log(dir / ("batch_order_" + arm->name + ".jsonl"));
      for (const auto& ids : arm->batch_order) log << nlohmann::json(ids).dump() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"no-reference video quality assessment toolkit"};
  app.require_subcommand(1);
  const std::string key_help =
      "Config keys accepted as overrides (key=value):\n" + vqa::config_help();

  std::string config_path, checkpoint_path, output_path;
  std::vector<std::string> overrides, videos;
  int frame_override = 0;

  auto* train = app.add_subcommand("train", "train a model per the config");
  train->add_option("--config", config_path, "run config (YAML)")->required();
  train->add_option("overrides", overrides, "key=value config overrides");
  train->footer(key_help);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the eval split");
  eval->add_option("--config", config_path, "run config (YAML)")->required();
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint to evaluate")->required();
  eval->add_option("--output", output_path, "also write the report here (JSON)");
  eval->add_option("overrides", overrides, "key=value config overrides");
  eval->footer(key_help);

  auto* score = app.add_subcommand("score", "score videos with a checkpoint");
  score->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  score->add_option("--frames", frame_override, "frames sampled per video (default: checkpoint's)");
  score->add_option("videos", videos, "video files (y4m)")->required();

  auto* ablate = app.add_subcommand("ablate", "run the loss ablation (full vs lambda1=lambda2=0)");
  ablate->add_option("--config", config_path, "run config (YAML)")->required();
  ablate->add_option("--output", output_path, "directory for the table and batch-order logs");
  ablate->add_option("overrides", overrides, "key=value config overrides");
  ablate->footer(key_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(vqa::ErrorCategory::config);
  }

  try {
    if (*train) return run_train(config_path, overrides);
    if (*eval) return run_eval(config_path, checkpoint_path, overrides, output_path);
    if (*score) return run_score(checkpoint_path, videos, frame_override);
    if (*ablate) return run_ablate(config_path, overrides, output_path);
  } catch (const vqa::Error& e) {
    std::cerr << "vqa: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "vqa: unexpected: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
