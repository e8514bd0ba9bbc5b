#pragma once

#include <filesystem>

#include "vqa/config.hpp"
#include "vqa/synthetic.hpp"

namespace vqa::testsupport {

// Desk-scale corpus + config used by the harness and acceptance suites.
inline synthetic::CorpusSpec toy_corpus_spec(const std::filesystem::path& dir) {
  synthetic::CorpusSpec spec;
  spec.dir = dir;
  spec.videos_per_tier = 6;
  spec.frames = 8;
  spec.size = 32;
  return spec;
}

inline RunConfig toy_run_config(const synthetic::Corpus& corpus) {
  RunConfig cfg;
  cfg.data.manifest = corpus.manifest_path.string();
  cfg.data.split = 1.0;  // overfit protocol: evaluate on the training set
  cfg.data.frame_count = 6;
  cfg.model.spatial.input_size = 32;
  cfg.model.spatial.backbone.stage_dims = {{8, 8, 16}, {4, 4, 32}};
  cfg.model.spatial.pool_tokens = 4;
  cfg.model.spatial.pool_dim = 16;
  cfg.model.spatial.fusion_layers = 1;
  cfg.model.spatial.fusion_heads = 2;
  cfg.model.spatial.embed_dim = 24;
  cfg.model.temporal.embed_dim = 24;
  cfg.model.temporal.heads = 2;
  cfg.model.temporal.max_frames = 8;
  cfg.train.batch_size = 8;
  cfg.train.lr0 = 0.05;
  cfg.train.epochs = 200;
  cfg.train.steps_per_epoch = 4;
  cfg.train.eval_every = 10;
  return cfg;
}

}  // namespace vqa::testsupport
