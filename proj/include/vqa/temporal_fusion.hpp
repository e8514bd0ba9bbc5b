#pragma once

#include <vector>

#include "vqa/layers.hpp"
#include "vqa/params.hpp"

namespace vqa {

struct TemporalConfig {
  int embed_dim = 64;
  int layers = 1;
  int heads = 4;
  int ff_mult = 2;
  int max_frames = 64;
  bool positional = true;

  void validate() const;
};

// Lightweight temporal head: learned positional encodings over the frame
// index, encoder layers, mean pooling over time, and an affine scalar head.
// The pre-head pooled feature doubles as the video-level embedding used by
// the contrastive objective.
class TemporalFusion {
 public:
  TemporalFusion(const TemporalConfig& cfg, ParamStore& store, Rng& init);

  const TemporalConfig& config() const { return cfg_; }

  struct Nodes {
    ad::Var score;            // 1 x 1
    ad::Var video_embedding;  // 1 x embed_dim, pre-head
  };
  Nodes forward(ParamBinding& ctx, ad::Var frame_embeddings) const;  // T x embed_dim

  ad::Var temporal_fuse(ParamBinding& ctx, ad::Var frame_embeddings) const;    // score
  ad::Var video_embedding(ParamBinding& ctx, ad::Var frame_embeddings) const;  // z

  void zero_residuals(ParamStore& store) const;

 private:
  TemporalConfig cfg_;
  std::vector<TransformerEncoderLayer> layers_;
};

}  // namespace vqa
