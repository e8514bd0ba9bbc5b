#pragma once

#include <memory>
#include <vector>

#include "vqa/backbone.hpp"
#include "vqa/layers.hpp"
#include "vqa/params.hpp"

namespace vqa {

struct SpatialConfig {
  int input_size = 64;
  BackboneSpec backbone;
  int pool_tokens = 4;  // per stage, a perfect square
  int pool_dim = 48;
  int fusion_layers = 2;
  int fusion_heads = 4;
  int fusion_ff_mult = 2;
  int embed_dim = 64;

  void validate() const;
};

// Per-frame quality feature path: frozen multi-stage local features ->
// pooled/normalized/rescaled tokens -> transformer fusion -> concat + affine
// projection to the frame embedding.
class SpatialEncoder {
 public:
  SpatialEncoder(const SpatialConfig& cfg, ParamStore& store, Rng& init);

  const SpatialConfig& config() const { return cfg_; }
  const LocalBackbone& backbone() const { return *backbone_; }

  LocalFeatureSet extract_local_features(const FrameTensor& frame) const;

  // The frozen half of the pooling: adaptive average pooling to pool_tokens
  // cells per stage plus per-token unit normalization. Cacheable per frame.
  std::vector<Eigen::MatrixXd> pooled_unit_tokens(const LocalFeatureSet& features) const;

  // Learned half: per-stage rescale and channel projection, concatenated
  // across stages into (S * pool_tokens) x pool_dim.
  ad::Var pool_cached(ParamBinding& ctx, const std::vector<Eigen::MatrixXd>& unit_tokens) const;
  ad::Var pool_local_features(ParamBinding& ctx, const LocalFeatureSet& features) const;

  ad::Var fuse_global(ParamBinding& ctx, ad::Var tokens) const;  // -> 1 x pool_dim
  ad::Var concat_project(ParamBinding& ctx, ad::Var local_summary, ad::Var global_feature) const;

  ad::Var embed_cached(ParamBinding& ctx, const std::vector<Eigen::MatrixXd>& unit_tokens) const;
  ad::Var embed_frame(ParamBinding& ctx, const FrameTensor& frame) const;  // -> 1 x embed_dim

  void zero_fusion_residuals(ParamStore& store) const;

 private:
  SpatialConfig cfg_;
  std::unique_ptr<LocalBackbone> backbone_;
  std::vector<TransformerEncoderLayer> fusion_;
  int token_grid_ = 1;  // sqrt(pool_tokens)
};

}  // namespace vqa
