#include "vqa/temporal_fusion.hpp"

#include <string>

#include "vqa/errors.hpp"

namespace vqa {

void TemporalConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("temporal", "embed_dim must be positive");
  if (layers < 1) throw ConfigError("temporal", "layers must be >= 1");
  if (max_frames < 1) throw ConfigError("temporal", "max_frames must be >= 1");
}

TemporalFusion::TemporalFusion(const TemporalConfig& cfg, ParamStore& store, Rng& init) : cfg_(cfg) {
  cfg_.validate();
  init_normal(store.create("temporal.pos", cfg_.max_frames, cfg_.embed_dim), init, 0.02);
  for (int l = 0; l < cfg_.layers; ++l) {
    layers_.emplace_back("temporal.layer" + std::to_string(l) + ".",
                         EncoderLayerConfig{cfg_.embed_dim, cfg_.heads, cfg_.ff_mult}, store, init);
  }
  init_xavier_normal(store.create("temporal.head.w", cfg_.embed_dim, 1), init);
  store.create("temporal.head.b", 1, 1);
}

TemporalFusion::Nodes TemporalFusion::forward(ParamBinding& ctx, ad::Var frame_embeddings) const {
  const int t = frame_embeddings.rows();
  if (t < 1) throw NumericError("temporal", "empty frame sequence");
  if (frame_embeddings.cols() != cfg_.embed_dim) {
    throw ConfigError("temporal", "frame embedding dim " + std::to_string(frame_embeddings.cols()) +
                                      " does not match configured " + std::to_string(cfg_.embed_dim));
  }
  if (t > cfg_.max_frames) {
    throw ConfigError("temporal", "sequence of " + std::to_string(t) + " frames exceeds max_frames " +
                                      std::to_string(cfg_.max_frames));
  }

  ad::Var x = frame_embeddings;
  if (cfg_.positional) {
    x = ad::add(x, ad::slice_rows(ctx.param("temporal.pos"), 0, t));
  }
  for (const auto& layer : layers_) x = layer.forward(ctx, x);

  Nodes nodes;
  nodes.video_embedding = ad::mean_rows(x);
  nodes.score = ad::add_row_broadcast(ad::matmul(nodes.video_embedding, ctx.param("temporal.head.w")),
                                      ctx.param("temporal.head.b"));
  return nodes;
}

ad::Var TemporalFusion::temporal_fuse(ParamBinding& ctx, ad::Var frame_embeddings) const {
  return forward(ctx, frame_embeddings).score;
}

ad::Var TemporalFusion::video_embedding(ParamBinding& ctx, ad::Var frame_embeddings) const {
  return forward(ctx, frame_embeddings).video_embedding;
}

void TemporalFusion::zero_residuals(ParamStore& store) const {
  for (const auto& layer : layers_) layer.zero_residual_branches(store);
}

}  // namespace vqa
