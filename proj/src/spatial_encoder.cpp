#include "vqa/spatial_encoder.hpp"

#include <cmath>
#include <string>

#include "vqa/errors.hpp"
#include "vqa/losses.hpp"

namespace vqa {

namespace {

int integer_sqrt(int n) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : -1;
}

std::string stage_key(std::size_t s, const char* suffix) {
  return "spatial.pool.stage" + std::to_string(s) + "." + suffix;
}

}  // namespace

void SpatialConfig::validate() const {
  if (input_size < 1) throw ConfigError("spatial", "input_size must be positive");
  if (pool_dim < 1 || embed_dim < 1) throw ConfigError("spatial", "dims must be positive");
  if (integer_sqrt(pool_tokens) < 1) {
    throw ConfigError("spatial", "pool_tokens must be a positive perfect square");
  }
  if (fusion_layers < 1) throw ConfigError("spatial", "fusion_layers must be >= 1");
  backbone.validate();
}

SpatialEncoder::SpatialEncoder(const SpatialConfig& cfg, ParamStore& store, Rng& init) : cfg_(cfg) {
  cfg_.validate();
  backbone_ = std::make_unique<LocalBackbone>(cfg_.backbone, cfg_.input_size);
  token_grid_ = integer_sqrt(cfg_.pool_tokens);

  const auto& dims = backbone_->stage_dims();
  for (const auto& d : dims) {
    if (token_grid_ > d.grid_h || token_grid_ > d.grid_w) {
      throw ConfigError("spatial", "pool_tokens " + std::to_string(cfg_.pool_tokens) +
                                       " exceeds a stage grid (" + std::to_string(d.grid_h) + "x" +
                                       std::to_string(d.grid_w) + ")");
    }
  }
  for (std::size_t s = 0; s < dims.size(); ++s) {
    store.create(stage_key(s, "scale"), 1, 1).setOnes();
    init_xavier_normal(store.create(stage_key(s, "proj.w"), dims[s].channels, cfg_.pool_dim), init);
    store.create(stage_key(s, "proj.b"), 1, cfg_.pool_dim);
  }
  for (int l = 0; l < cfg_.fusion_layers; ++l) {
    fusion_.emplace_back("spatial.fusion.layer" + std::to_string(l) + ".",
                         EncoderLayerConfig{cfg_.pool_dim, cfg_.fusion_heads, cfg_.fusion_ff_mult},
                         store, init);
  }
  init_xavier_normal(store.create("spatial.concat.w", 2 * cfg_.pool_dim, cfg_.embed_dim), init);
  store.create("spatial.concat.b", 1, cfg_.embed_dim);
}

LocalFeatureSet SpatialEncoder::extract_local_features(const FrameTensor& frame) const {
  return backbone_->extract(frame);
}

std::vector<Eigen::MatrixXd> SpatialEncoder::pooled_unit_tokens(const LocalFeatureSet& features) const {
  if (features.stages.empty()) throw NumericError("spatial", "empty feature set");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(features.stages.size());
  const int t = token_grid_;
  for (std::size_t s = 0; s < features.stages.size(); ++s) {
    const auto& d = features.dims[s];
    const auto& cells = features.stages[s];
    if (cells.rows() != d.grid_h * d.grid_w || cells.cols() != d.channels) {
      throw NumericError("spatial", "stage " + std::to_string(s) + " shape mismatch");
    }
    if (!cells.allFinite()) throw NumericError("spatial", "non-finite local features");

    Eigen::MatrixXd tokens = Eigen::MatrixXd::Zero(t * t, d.channels);
    for (int ty = 0; ty < t; ++ty) {
      const int y0 = ty * d.grid_h / t, y1 = (ty + 1) * d.grid_h / t;
      for (int tx = 0; tx < t; ++tx) {
        const int x0 = tx * d.grid_w / t, x1 = (tx + 1) * d.grid_w / t;
        auto token = tokens.row(ty * t + tx);
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) token += cells.row(y * d.grid_w + x);
        }
        token /= static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
    // unit-normalize each token with the same guard the graph op uses
    const double eps = lossgraph::kNormEps;
    for (int r = 0; r < tokens.rows(); ++r) {
      const double norm = std::sqrt(tokens.row(r).squaredNorm() + eps * eps);
      tokens.row(r) /= (norm + eps);
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

ad::Var SpatialEncoder::pool_cached(ParamBinding& ctx, const std::vector<Eigen::MatrixXd>& unit_tokens) const {
  const auto& dims = backbone_->stage_dims();
  if (unit_tokens.size() != dims.size()) throw NumericError("spatial", "stage count mismatch");
  std::vector<ad::Var> parts;
  parts.reserve(unit_tokens.size());
  for (std::size_t s = 0; s < unit_tokens.size(); ++s) {
    if (unit_tokens[s].cols() != dims[s].channels) {
      throw NumericError("spatial", "stage " + std::to_string(s) + " channel mismatch");
    }
    ad::Var tokens = ctx.graph().constant(unit_tokens[s]);
    ad::Var scaled = ad::scale_by_scalar(tokens, ctx.param(stage_key(s, "scale")));
    parts.push_back(ad::add_row_broadcast(ad::matmul(scaled, ctx.param(stage_key(s, "proj.w"))),
                                          ctx.param(stage_key(s, "proj.b"))));
  }
  return ad::concat_rows(parts);
}

ad::Var SpatialEncoder::pool_local_features(ParamBinding& ctx, const LocalFeatureSet& features) const {
  return pool_cached(ctx, pooled_unit_tokens(features));
}

ad::Var SpatialEncoder::fuse_global(ParamBinding& ctx, ad::Var tokens) const {
  if (tokens.rows() < 1) throw NumericError("spatial", "fuse_global needs a nonempty token sequence");
  ad::Var x = tokens;
  for (const auto& layer : fusion_) x = layer.forward(ctx, x);
  return ad::mean_rows(x);
}

ad::Var SpatialEncoder::concat_project(ParamBinding& ctx, ad::Var local_summary,
                                       ad::Var global_feature) const {
  ad::Var cat = ad::concat_cols({local_summary, global_feature});
  const ad::Var w = ctx.param("spatial.concat.w");
  if (cat.cols() != w.rows()) {
    throw ConfigError("spatial", "concat width " + std::to_string(cat.cols()) +
                                     " does not match projection rows " + std::to_string(w.rows()));
  }
  return ad::add_row_broadcast(ad::matmul(cat, w), ctx.param("spatial.concat.b"));
}

ad::Var SpatialEncoder::embed_cached(ParamBinding& ctx,
                                     const std::vector<Eigen::MatrixXd>& unit_tokens) const {
  ad::Var tokens = pool_cached(ctx, unit_tokens);
  ad::Var local_summary = ad::mean_rows(tokens);
  ad::Var global_feature = fuse_global(ctx, tokens);
  return concat_project(ctx, local_summary, global_feature);
}

ad::Var SpatialEncoder::embed_frame(ParamBinding& ctx, const FrameTensor& frame) const {
  return embed_cached(ctx, pooled_unit_tokens(extract_local_features(frame)));
}

void SpatialEncoder::zero_fusion_residuals(ParamStore& store) const {
  for (const auto& layer : fusion_) layer.zero_residual_branches(store);
}

}  // namespace vqa
