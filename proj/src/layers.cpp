#include "vqa/layers.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "vqa/errors.hpp"

namespace vqa {

namespace {
constexpr double kLayerNormEps = 1e-5;
}

TransformerEncoderLayer::TransformerEncoderLayer(std::string prefix, const EncoderLayerConfig& cfg,
                                                 ParamStore& store, Rng& init)
    : prefix_(std::move(prefix)), cfg_(cfg) {
  if (cfg_.dim < 1 || cfg_.heads < 1 || cfg_.dim % cfg_.heads != 0) {
    throw ConfigError("encoder", prefix_ + ": dim must be a positive multiple of heads");
  }
  if (cfg_.ff_mult < 1) throw ConfigError("encoder", prefix_ + ": ff_mult must be >= 1");
  const int d = cfg_.dim;
  const int f = d * cfg_.ff_mult;

  store.create(key("ln1.g"), 1, d).setOnes();
  store.create(key("ln1.b"), 1, d);
  for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
    init_xavier_normal(store.create(key(w), d, d), init);
  }
  for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) store.create(key(b), 1, d);
  store.create(key("ln2.g"), 1, d).setOnes();
  store.create(key("ln2.b"), 1, d);
  init_xavier_normal(store.create(key("ff.w1"), d, f), init);
  store.create(key("ff.b1"), 1, f);
  init_xavier_normal(store.create(key("ff.w2"), f, d), init);
  store.create(key("ff.b2"), 1, d);
}

ad::Var TransformerEncoderLayer::forward(ParamBinding& ctx, ad::Var x) const {
  if (x.cols() != cfg_.dim) {
    throw ConfigError("encoder", prefix_ + ": token dim " + std::to_string(x.cols()) +
                                     " does not match layer dim " + std::to_string(cfg_.dim));
  }
  const int dh = cfg_.dim / cfg_.heads;
  auto p = [&](const char* s) { return ctx.param(key(s)); };

  ad::Var h = ad::layer_norm(x, p("ln1.g"), p("ln1.b"), kLayerNormEps);
  ad::Var q = ad::add_row_broadcast(ad::matmul(h, p("attn.wq")), p("attn.bq"));
  ad::Var k = ad::add_row_broadcast(ad::matmul(h, p("attn.wk")), p("attn.bk"));
  ad::Var v = ad::add_row_broadcast(ad::matmul(h, p("attn.wv")), p("attn.bv"));

  std::vector<ad::Var> heads;
  heads.reserve(static_cast<std::size_t>(cfg_.heads));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int i = 0; i < cfg_.heads; ++i) {
    ad::Var qh = ad::slice_cols(q, i * dh, dh);
    ad::Var kh = ad::slice_cols(k, i * dh, dh);
    ad::Var vh = ad::slice_cols(v, i * dh, dh);
    ad::Var attn = ad::softmax_rows(ad::mul_scalar(ad::matmul(qh, ad::transpose(kh)), scale));
    heads.push_back(ad::matmul(attn, vh));
  }
  ad::Var o = ad::add_row_broadcast(ad::matmul(ad::concat_cols(heads), p("attn.wo")), p("attn.bo"));
  x = ad::add(x, o);

  ad::Var f = ad::layer_norm(x, p("ln2.g"), p("ln2.b"), kLayerNormEps);
  ad::Var ff1 = ad::gelu(ad::add_row_broadcast(ad::matmul(f, p("ff.w1")), p("ff.b1")));
  ad::Var ff2 = ad::add_row_broadcast(ad::matmul(ff1, p("ff.w2")), p("ff.b2"));
  return ad::add(x, ff2);
}

void TransformerEncoderLayer::zero_residual_branches(ParamStore& store) const {
  store.at(key("attn.wo")).setZero();
  store.at(key("attn.bo")).setZero();
  store.at(key("ff.w2")).setZero();
  store.at(key("ff.b2")).setZero();
}

}  // namespace vqa
