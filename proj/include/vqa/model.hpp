#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqa/spatial_encoder.hpp"
#include "vqa/temporal_fusion.hpp"

namespace vqa {

struct ModelConfig {
  SpatialConfig spatial;
  TemporalConfig temporal;
  std::uint64_t init_seed = 7;

  void validate() const;
  // Canonical architecture description; checkpoints refuse to load when it
  // differs.
  std::string arch_string() const;
};

// Full per-video scoring path: spatial encoder over sampled frames, temporal
// fusion to the scalar prediction and the video embedding.
class VqaModel {
 public:
  explicit VqaModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  SpatialEncoder& spatial() { return *spatial_; }
  const SpatialEncoder& spatial() const { return *spatial_; }
  TemporalFusion& temporal() { return *temporal_; }

  // Per-frame frozen features (per-stage pooled unit tokens), cacheable
  // across epochs since the backbone does not train.
  using CachedFrame = std::vector<Eigen::MatrixXd>;
  std::vector<CachedFrame> cache_frames(const std::vector<FrameTensor>& frames) const;

  struct VideoNodes {
    ad::Var score;             // 1 x 1
    ad::Var video_embedding;   // 1 x embed_dim
    ad::Var frame_embeddings;  // T x embed_dim
  };
  VideoNodes forward_cached(ParamBinding& ctx, const std::vector<CachedFrame>& frames) const;
  VideoNodes forward_frames(ParamBinding& ctx, const std::vector<FrameTensor>& frames) const;

  // Inference-mode scalar prediction.
  double predict(const std::vector<FrameTensor>& frames) const;

 private:
  ModelConfig cfg_;
  ParamStore store_;
  std::unique_ptr<SpatialEncoder> spatial_;
  std::unique_ptr<TemporalFusion> temporal_;
};

}  // namespace vqa
