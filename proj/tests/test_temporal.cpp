#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/param_gradcheck.hpp"
#include "vqa/errors.hpp"
#include "vqa/rng.hpp"
#include "vqa/temporal_fusion.hpp"

using vqa::ParamBinding;
using vqa::ParamStore;
using vqa::Rng;
using vqa::TemporalConfig;
using vqa::TemporalFusion;
namespace ad = vqa::ad;

namespace {

TemporalConfig small_config(bool positional = true) {
  TemporalConfig cfg;
  cfg.embed_dim = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.ff_mult = 2;
  cfg.max_frames = 12;
  cfg.positional = positional;
  return cfg;
}

Eigen::MatrixXd random_frames(Rng& rng, int t, int d) {
  Eigen::MatrixXd m(t, d);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("single frame through identity layers hits the affine head directly") {
  ParamStore store;
  Rng init(1);
  const auto cfg = small_config(false);
  const TemporalFusion fusion(cfg, store, init);
  fusion.zero_residuals(store);

  Rng rng(2);
  const Eigen::MatrixXd frame = random_frames(rng, 1, 8);
  ad::Graph g;
  ParamBinding ctx(g, store);
  const auto nodes = fusion.forward(ctx, g.constant(frame));

  CHECK(nodes.video_embedding.value().isApprox(frame, 1e-12));
  const double expected =
      (frame * store.at("temporal.head.w"))(0, 0) + store.at("temporal.head.b")(0, 0);
  CHECK(nodes.score.scalar() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("duplicating frames leaves the score unchanged without positions") {
  ParamStore store;
  Rng init(3);
  const TemporalFusion fusion(small_config(false), store, init);

  Rng rng(4);
  const Eigen::MatrixXd frames = random_frames(rng, 4, 8);
  Eigen::MatrixXd doubled(8, 8);
  for (int i = 0; i < 4; ++i) {
    doubled.row(2 * i) = frames.row(i);
    doubled.row(2 * i + 1) = frames.row(i);
  }

  ad::Graph g1, g2;
  ParamBinding c1(g1, store), c2(g2, store);
  const double a = fusion.temporal_fuse(c1, g1.constant(frames)).scalar();
  const double b = fusion.temporal_fuse(c2, g2.constant(doubled)).scalar();
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(std::isfinite(a));
}

TEST_CASE("positional encodings break permutation invariance when enabled") {
  Rng rng(5);
  const Eigen::MatrixXd frames = random_frames(rng, 4, 8);
  Eigen::MatrixXd permuted(4, 8);
  const int perm[4] = {2, 0, 3, 1};
  for (int i = 0; i < 4; ++i) permuted.row(i) = frames.row(perm[i]);

  // positions zeroed: permutation cannot change the score
  {
    ParamStore store;
    Rng init(6);
    const TemporalFusion fusion(small_config(true), store, init);
    store.at("temporal.pos").setZero();
    ad::Graph g1, g2;
    ParamBinding c1(g1, store), c2(g2, store);
    CHECK(fusion.temporal_fuse(c1, g1.constant(frames)).scalar() ==
          doctest::Approx(fusion.temporal_fuse(c2, g2.constant(permuted)).scalar()).epsilon(1e-12));
  }

  // positions live: the permuted sequence scores differently
  {
    ParamStore store;
    Rng init(7);
    const TemporalFusion fusion(small_config(true), store, init);
    ad::Graph g1, g2;
    ParamBinding c1(g1, store), c2(g2, store);
    const double a = fusion.temporal_fuse(c1, g1.constant(frames)).scalar();
    const double b = fusion.temporal_fuse(c2, g2.constant(permuted)).scalar();
    CHECK(std::abs(a - b) > 1e-8);
  }
}

TEST_CASE("video embedding contract") {
  ParamStore store;
  Rng init(8);
  const TemporalFusion fusion(small_config(), store, init);
  Rng rng(9);
  const Eigen::MatrixXd frames = random_frames(rng, 3, 8);

  ad::Graph g1, g2;
  ParamBinding c1(g1, store), c2(g2, store);
  const auto z1 = fusion.video_embedding(c1, g1.constant(frames)).value();
  const auto z2 = fusion.video_embedding(c2, g2.constant(frames)).value();
  CHECK(z1 == z2);  // identical sequences, identical embedding
  CHECK(z1.rows() == 1);
  CHECK(z1.cols() == 8);
  CHECK(z1.allFinite());
}

TEST_CASE("temporal guards") {
  ParamStore store;
  Rng init(10);
  const TemporalFusion fusion(small_config(), store, init);
  ad::Graph g;
  ParamBinding ctx(g, store);
  CHECK_THROWS_AS(fusion.forward(ctx, g.constant(Eigen::MatrixXd::Zero(0, 8))), vqa::NumericError);
  CHECK_THROWS_AS(fusion.forward(ctx, g.constant(Eigen::MatrixXd::Zero(3, 5))), vqa::ConfigError);
  CHECK_THROWS_AS(fusion.forward(ctx, g.constant(Eigen::MatrixXd::Zero(13, 8))), vqa::ConfigError);
}

TEST_CASE("temporal gradients match finite differences") {
  for (std::uint64_t seed : {41ULL, 42ULL, 43ULL}) {
    ParamStore store;
    Rng init(seed);
    const TemporalFusion fusion(small_config(), store, init);
    Rng rng(seed + 50);
    const Eigen::MatrixXd frames = random_frames(rng, 3, 8);

    // gradient of the score w.r.t. every head/encoder/positional weight
    const double err = vqa::testsupport::param_gradcheck_max_err(store, [&](ParamBinding& ctx) {
      return fusion.temporal_fuse(ctx, ctx.graph().constant(frames));
    });
    CHECK(err < 1e-4);

    // and w.r.t. the input frame embeddings
    auto forward = [&](const ad::Mat& x) {
      ad::Graph g;
      ParamBinding ctx(g, store);
      return fusion.temporal_fuse(ctx, g.leaf(x)).scalar();
    };
    ad::Mat analytic;
    {
      ad::Graph g;
      ParamBinding ctx(g, store);
      ad::Var x = g.leaf(frames);
      ad::Var score = fusion.temporal_fuse(ctx, x);
      g.backward(score);
      analytic = x.grad();
    }
    CHECK(vqa::testsupport::gradcheck_max_err(forward, frames, analytic) < 1e-4);
  }
}
