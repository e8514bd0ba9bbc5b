#include "vqa/model.hpp"

#include <sstream>

#include "vqa/errors.hpp"

namespace vqa {

void ModelConfig::validate() const {
  spatial.validate();
  temporal.validate();
  if (spatial.embed_dim != temporal.embed_dim) {
    throw ConfigError("model", "spatial embed_dim " + std::to_string(spatial.embed_dim) +
                                   " differs from temporal embed_dim " +
                                   std::to_string(temporal.embed_dim));
  }
}

std::string ModelConfig::arch_string() const {
  std::ostringstream os;
  os << "spatial(input=" << spatial.input_size << ",backbone=";
  if (spatial.backbone.kind == BackboneKind::deterministic_stub) {
    os << "stub#" << spatial.backbone.stub_seed << "[";
    for (std::size_t s = 0; s < spatial.backbone.stage_dims.size(); ++s) {
      const auto& d = spatial.backbone.stage_dims[s];
      os << (s ? "," : "") << d.grid_h << "x" << d.grid_w << "x" << d.channels;
    }
    os << "]";
  } else {
    os << "pretrained";
  }
  os << ",tokens=" << spatial.pool_tokens << ",pool_dim=" << spatial.pool_dim
     << ",fusion=" << spatial.fusion_layers << "x" << spatial.fusion_heads << "xff"
     << spatial.fusion_ff_mult << ",embed=" << spatial.embed_dim << ");";
  os << "temporal(layers=" << temporal.layers << ",heads=" << temporal.heads << ",ff="
     << temporal.ff_mult << ",max_frames=" << temporal.max_frames
     << ",pos=" << (temporal.positional ? 1 : 0) << ");";
  os << "seed=" << init_seed;
  return os.str();
}

VqaModel::VqaModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng init(Rng::mix(cfg_.init_seed, 0x5ead));
  spatial_ = std::make_unique<SpatialEncoder>(cfg_.spatial, store_, init);
  temporal_ = std::make_unique<TemporalFusion>(cfg_.temporal, store_, init);
}

std::vector<VqaModel::CachedFrame> VqaModel::cache_frames(const std::vector<FrameTensor>& frames) const {
  std::vector<CachedFrame> cached;
  cached.reserve(frames.size());
  for (const auto& f : frames) {
    cached.push_back(spatial_->pooled_unit_tokens(spatial_->extract_local_features(f)));
  }
  return cached;
}

VqaModel::VideoNodes VqaModel::forward_cached(ParamBinding& ctx,
                                              const std::vector<CachedFrame>& frames) const {
  if (frames.empty()) throw NumericError("model", "empty frame sequence");
  std::vector<ad::Var> embeddings;
  embeddings.reserve(frames.size());
  for (const auto& f : frames) embeddings.push_back(spatial_->embed_cached(ctx, f));

  VideoNodes nodes;
  nodes.frame_embeddings = ad::concat_rows(embeddings);
  const auto t = temporal_->forward(ctx, nodes.frame_embeddings);
  nodes.score = t.score;
  nodes.video_embedding = t.video_embedding;
  return nodes;
}

VqaModel::VideoNodes VqaModel::forward_frames(ParamBinding& ctx,
                                              const std::vector<FrameTensor>& frames) const {
  return forward_cached(ctx, cache_frames(frames));
}

double VqaModel::predict(const std::vector<FrameTensor>& frames) const {
  ad::Graph g;
  ParamBinding ctx(g, store_);
  return forward_frames(ctx, frames).score.scalar();
}

}  // namespace vqa
