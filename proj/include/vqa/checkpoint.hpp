#pragma once

#include <filesystem>
#include <memory>

#include "vqa/config.hpp"
#include "vqa/model.hpp"
#include "vqa/params.hpp"

namespace vqa {

struct TrainState {
  int epoch = 0;
  long step = 0;
  double lr = 0.0;
  double best_srocc = -2.0;  // below any attainable correlation
  std::uint64_t batch_seed = 0;
};

// Checkpoints carry the full config snapshot, the architecture signature,
// every parameter tensor, and (optionally) optimizer moments. Loading
// refuses a checkpoint whose architecture differs from the target model.
void save_checkpoint(const std::filesystem::path& path, const VqaModel& model, const Adam* optimizer,
                     const TrainState& state, const RunConfig& cfg);

TrainState load_checkpoint(const std::filesystem::path& path, VqaModel& model, Adam* optimizer);

struct ScoringBundle {
  RunConfig cfg;
  std::unique_ptr<VqaModel> model;
  TrainState state;
};

// Rebuilds the model a checkpoint describes and loads its weights.
ScoringBundle load_for_scoring(const std::filesystem::path& path);

}  // namespace vqa
