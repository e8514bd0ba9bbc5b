#pragma once

#include <string>

#include "vqa/params.hpp"

namespace vqa {

struct EncoderLayerConfig {
  int dim = 0;
  int heads = 1;
  int ff_mult = 2;
};

// Pre-normalization transformer encoder layer: multi-head self-attention and
// a GELU feed-forward block, each behind a residual connection. Carries no
// positional information of its own.
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer(std::string prefix, const EncoderLayerConfig& cfg, ParamStore& store,
                          Rng& init);

  ad::Var forward(ParamBinding& ctx, ad::Var x) const;  // n x dim -> n x dim

  // Zeroes both residual output projections, turning the layer into the
  // identity map. Diagnostic hook.
  void zero_residual_branches(ParamStore& store) const;

 private:
  std::string key(const char* suffix) const { return prefix_ + suffix; }

  std::string prefix_;
  EncoderLayerConfig cfg_;
};

}  // namespace vqa
