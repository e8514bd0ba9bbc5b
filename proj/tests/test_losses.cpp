#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "support/gradcheck.hpp"
#include "support/naive_gc.hpp"
#include "vqa/errors.hpp"
#include "vqa/losses.hpp"
#include "vqa/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using vqa::LossConfig;
using vqa::Rng;
namespace ad = vqa::ad;

namespace {

MatrixXd rand_embeddings(Rng& rng, int n, int d) {
  MatrixXd z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = rng.normal();
  return z;
}

VectorXd randv(Rng& rng, int n, double scale = 1.0) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

MatrixXd identical_rows(int n, int d) {
  MatrixXd z(n, d);
  VectorXd row = VectorXd::LinSpaced(d, 0.3, 1.1);
  for (int i = 0; i < n; ++i) z.row(i) = row;
  return z;
}

// two orthonormal groups: rows {e1, e1, e2, e2}
MatrixXd orthogonal_groups(int d = 4) {
  MatrixXd z = MatrixXd::Zero(4, d);
  z(0, 0) = z(1, 0) = 1.0;
  z(2, 1) = z(3, 1) = 1.0;
  return z;
}

}  // namespace

TEST_CASE("cosine similarity hand cases") {
  Rng rng(3);
  const VectorXd z = randv(rng, 5);
  CHECK(vqa::cosine_similarity(z, z) == doctest::Approx(1.0).epsilon(1e-9));

  VectorXd e1 = VectorXd::Zero(3), e2 = VectorXd::Zero(3);
  e1[0] = 1.0;
  e2[1] = 1.0;
  CHECK(vqa::cosine_similarity(e1, e2) == doctest::Approx(0.0).epsilon(1e-12));

  VectorXd a(2), b(2);
  a << 1, 1;
  b << 1, 0;
  CHECK(vqa::cosine_similarity(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(vqa::cosine_similarity(a, bad), vqa::NumericError);
}

TEST_CASE("gc pair term hand cases") {
  LossConfig cfg;
  cfg.p = 0.5;

  // identical embeddings: numerator exp(1/tau), denominator 2 exp(1/tau)
  for (double tau : {0.07, 0.5, 1.0, 3.0}) {
    cfg.tau = tau;
    CHECK(vqa::gc_pair_term(0, 1, identical_rows(4, 3), cfg) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }

  // orthogonal groups at tau = 1: -log(e / 2) = log 2 - 1
  cfg.tau = 1.0;
  CHECK(vqa::gc_pair_term(0, 1, orthogonal_groups(), cfg) ==
        doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-9));

  // same-group precondition and config guards
  CHECK_THROWS_AS(vqa::gc_pair_term(0, 2, orthogonal_groups(), cfg), vqa::ConfigError);
  CHECK_THROWS_AS(vqa::gc_pair_term(1, 1, orthogonal_groups(), cfg), vqa::ConfigError);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(vqa::gc_pair_term(0, 1, orthogonal_groups(), cfg), vqa::ConfigError);
}

TEST_CASE("gc pair term is bounded by the similarity range") {
  Rng rng(11);
  LossConfig cfg;
  cfg.tau = 0.4;
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd z = rand_embeddings(rng, 6, 5);
    const double opposing = 3.0;  // both groups have 3 members
    const double lo = std::log(opposing) - 2.0 / cfg.tau;
    const double hi = std::log(opposing) + 2.0 / cfg.tau;
    const double t = vqa::gc_pair_term(0, 1, z, cfg);
    CHECK(t >= lo - 1e-9);
    CHECK(t <= hi + 1e-9);
  }
}

TEST_CASE("summed gc loss hand cases") {
  LossConfig cfg;
  cfg.tau = 0.3;
  CHECK(vqa::gc_loss(identical_rows(4, 6), cfg) == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-9));

  cfg.tau = 1.0;
  CHECK(vqa::gc_loss(orthogonal_groups(), cfg) ==
        doctest::Approx(4.0 * (std::log(2.0) - 1.0)).epsilon(1e-9));

  // p*N = 1 per side: both double sums are empty
  cfg.p = 0.25;
  CHECK(vqa::gc_loss(identical_rows(4, 3), cfg) == 0.0);

  // overlapping second-sum range is rejected
  cfg.p = 0.75;
  CHECK_THROWS_AS(vqa::gc_loss(identical_rows(4, 3), cfg), vqa::ConfigError);

  // non-integral p*N is rejected
  cfg.p = 0.4;
  CHECK_THROWS_AS(vqa::gc_loss(identical_rows(4, 3), cfg), vqa::ConfigError);
}

TEST_CASE("gc loss with p < 0.5 sums the trailing group-B block") {
  // N=6, p=1/3: A pairs over rows {0,1}, B pairs over rows {4,5}.
  LossConfig cfg;
  cfg.p = 1.0 / 3.0;
  cfg.tau = 1.0;
  MatrixXd z = MatrixXd::Zero(6, 3);
  for (int i = 0; i < 2; ++i) z(i, 0) = 1.0;
  for (int i = 2; i < 6; ++i) z(i, 1) = 1.0;
  // A anchors: num = exp(1), den over 4 B rows = 4; term = log 4 - 1.
  // B anchors in rows 4..5: num = exp(1), den over 2 A rows = 2 exp(0).
  const double expected = 2.0 * (std::log(4.0) - 1.0) + 2.0 * (std::log(2.0) - 1.0);
  CHECK(vqa::gc_loss(z, cfg) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("literal denominator mode follows the fixed range") {
  LossConfig cfg;
  cfg.tau = 1.0;
  cfg.gc_denominator = vqa::GcDenominator::literal;
  // For a B anchor the literal range includes the anchor itself.
  const MatrixXd z = orthogonal_groups();
  // anchor 2, partner 3: num = exp(1); den = exp(sim(2,2)) + exp(sim(2,3)) = 2e
  CHECK(vqa::gc_pair_term(2, 3, z, cfg) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  // anchor 0 (group A), partner 1: num = exp(1); den over B rows = 2
  CHECK(vqa::gc_pair_term(0, 1, z, cfg) == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("log-space gc matches the naive formula where it is stable") {
  Rng rng(5);
  LossConfig cfg;
  for (double tau : {0.05, 0.1, 1.0}) {
    cfg.tau = tau;
    for (int trial = 0; trial < 20; ++trial) {
      const MatrixXd z = rand_embeddings(rng, 4, 6);
      const double naive = vqa::testsupport::naive_gc_pair_term<double>(0, 1, z, tau, cfg.p);
      CHECK(std::abs(vqa::gc_pair_term(0, 1, z, cfg) - naive) < 1e-10);
    }
  }
}

TEST_CASE("gc stays finite at temperatures that overflow the naive form") {
  Rng rng(6);
  const MatrixXd z = rand_embeddings(rng, 4, 6);
  LossConfig cfg;

  cfg.tau = 0.01;  // exp(sim/tau) overflows in single precision
  CHECK(std::isfinite(vqa::gc_pair_term(0, 1, z, cfg)));
  CHECK(std::isfinite(vqa::gc_loss(z, cfg)));
  const float naive32 = vqa::testsupport::naive_gc_pair_term<float>(0, 1, identical_rows(4, 3), 0.01, 0.5);
  CHECK(!std::isfinite(std::exp(1.0f / 0.01f)));  // the naive numerator alone
  CHECK(!std::isfinite(naive32));

  cfg.tau = 0.001;  // and in double precision
  CHECK(std::isfinite(vqa::gc_pair_term(0, 1, z, cfg)));
  CHECK(!std::isfinite(vqa::testsupport::naive_gc_pair_term<double>(0, 1, identical_rows(4, 3), 0.001, 0.5)));
}

TEST_CASE("gc monotonicity under controlled similarity changes") {
  LossConfig cfg;
  cfg.tau = 0.5;

  // Within-group similarity rises (theta shrinks); cross-group stays 0.
  std::vector<double> gc_by_theta;
  for (double deg : {80.0, 60.0, 40.0, 20.0}) {
    const double th = deg * M_PI / 180.0;
    MatrixXd z = MatrixXd::Zero(4, 4);
    z.row(0) << std::cos(th), std::sin(th), 0, 0;
    z.row(1) << std::cos(th), -std::sin(th), 0, 0;
    z(2, 2) = 1.0;
    z(3, 3) = 1.0;
    gc_by_theta.push_back(vqa::gc_loss(z, cfg));
  }
  for (std::size_t i = 1; i < gc_by_theta.size(); ++i) CHECK(gc_by_theta[i] < gc_by_theta[i - 1]);

  // Cross-group similarity rises (phi shrinks); within-group stays 1.
  std::vector<double> gc_by_phi;
  for (double deg : {90.0, 70.0, 50.0, 30.0}) {
    const double ph = deg * M_PI / 180.0;
    MatrixXd z(4, 2);
    z.row(0) << 1, 0;
    z.row(1) << 1, 0;
    z.row(2) << std::cos(ph), std::sin(ph);
    z.row(3) << std::cos(ph), std::sin(ph);
    gc_by_phi.push_back(vqa::gc_loss(z, cfg));
  }
  for (std::size_t i = 1; i < gc_by_phi.size(); ++i) CHECK(gc_by_phi[i] > gc_by_phi[i - 1]);
}

TEST_CASE("gc loss is invariant to positive rescaling of embeddings") {
  Rng rng(7);
  LossConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd z = rand_embeddings(rng, 4, 5);
    const double base = vqa::gc_loss(z, cfg);
    for (double s : {0.01, 3.0, 250.0}) {
      CHECK(vqa::gc_loss(s * z, cfg) == doctest::Approx(base).epsilon(1e-9));
    }
  }
}

TEST_CASE("rank loss hand cases") {
  VectorXd preds(2), labels(2);

  // margin 1, pred diff 0.5, label diff 1 -> 0.5
  preds << 1.0, 0.5;
  labels << 2.0, 1.0;
  CHECK(vqa::rank_loss(preds, labels, 1.0, {{0, 1}}) == doctest::Approx(0.5).epsilon(1e-12));

  // margin 0.2, pred diff -0.5, label diff 1 -> 0.7
  preds << 0.0, 0.5;
  CHECK(vqa::rank_loss(preds, labels, 0.2, {{0, 1}}) == doctest::Approx(0.7).epsilon(1e-12));

  // margin 0 with concordant pairs -> 0
  VectorXd p3(3), l3(3);
  p3 << 1, 2, 3;
  l3 << 10, 20, 30;
  CHECK(vqa::rank_loss(p3, l3, 0.0, vqa::all_index_pairs(3)) == 0.0);

  CHECK(vqa::rank_loss(p3, l3, 0.0, {}) == 0.0);  // empty pair list
}

TEST_CASE("rank loss invariances") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd preds = randv(rng, 5);
    const VectorXd labels = randv(rng, 5);
    const auto pairs = vqa::all_index_pairs(5);
    const double base = vqa::rank_loss(preds, labels, 0.3, pairs);
    const double c = rng.normal() * 10.0;
    CHECK(vqa::rank_loss(preds.array() + c, labels, 0.3, pairs) == doctest::Approx(base).epsilon(1e-9));
    CHECK(vqa::rank_loss(preds, labels.array() + c, 0.3, pairs) == doctest::Approx(base).epsilon(1e-9));

    // margin 0: zero iff every pair is concordant (non-negative product)
    const double at_zero = vqa::rank_loss(preds, labels, 0.0, pairs);
    bool all_concordant = true;
    for (auto [i, j] : pairs) {
      if ((preds[i] - preds[j]) * (labels[i] - labels[j]) < 0.0) all_concordant = false;
    }
    CHECK((at_zero == 0.0) == all_concordant);
  }
}

TEST_CASE("mse and l1 hand cases") {
  VectorXd p(2), l(2);
  p << 0, 2;
  l << 0, 0;
  CHECK(vqa::mse_loss(p, l) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(vqa::l1_loss(p, l) == doctest::Approx(1.0).epsilon(1e-12));

  VectorXd p1(1), l1v(1);
  p1 << 3;
  l1v << 1;
  CHECK(vqa::mse_loss(p1, l1v) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(vqa::l1_loss(p1, l1v) == doctest::Approx(2.0).epsilon(1e-12));

  CHECK(vqa::mse_loss(p, p) == 0.0);
  CHECK(vqa::l1_loss(p, p) == 0.0);
  CHECK_THROWS_AS(vqa::mse_loss(VectorXd(), VectorXd()), vqa::NumericError);
}

TEST_CASE("total loss composes the hand-derived components") {
  // One batch whose components are exactly MSE 2, L1 1, gc 4 log 2, rank 0.5.
  vqa::BatchOutputs out;
  out.embeddings = identical_rows(4, 5);
  out.labels = VectorXd(4);
  out.labels << 0, 5, 10, 15;
  out.predictions = VectorXd(4);
  out.predictions << 2, 3, 10, 15;

  LossConfig cfg;
  cfg.tau = 0.2;
  cfg.margin = 5.5;  // only the (0,1) pair is active: 5.5 - 5 = 0.5
  cfg.lambda1 = 0.1;
  cfg.lambda2 = 1.0;

  const auto b = vqa::total_loss(out, cfg);
  CHECK(b.mse == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.l1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.gc == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-9));
  CHECK(b.rank == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.total == doctest::Approx(3.777258872223978).epsilon(1e-9));
}

TEST_CASE("total loss breakdown recombines and disabled terms vanish") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    vqa::BatchOutputs out;
    out.embeddings = rand_embeddings(rng, 4, 6);
    out.predictions = randv(rng, 4);
    out.labels = randv(rng, 4);

    LossConfig cfg;
    cfg.tau = 0.2;
    cfg.margin = 0.1;
    cfg.lambda1 = 0.37;
    cfg.lambda2 = 1.21;
    const auto b = vqa::total_loss(out, cfg);
    CHECK(b.total ==
          doctest::Approx(b.mse + b.l1 + cfg.lambda1 * b.gc + cfg.lambda2 * b.rank).epsilon(1e-12));

    // component values agree with the standalone operations
    CHECK(b.mse == doctest::Approx(vqa::mse_loss(out.predictions, out.labels)).epsilon(1e-12));
    CHECK(b.gc == doctest::Approx(vqa::gc_loss(out.embeddings, cfg)).epsilon(1e-12));
    CHECK(b.rank == doctest::Approx(vqa::rank_loss(out.predictions, out.labels, cfg.margin,
                                                   vqa::all_index_pairs(4)))
                        .epsilon(1e-12));

    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    const auto b0 = vqa::total_loss(out, cfg);
    CHECK(b0.gc == 0.0);
    CHECK(b0.rank == 0.0);
    CHECK(b0.total == b0.mse + b0.l1);  // exact
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(10);
  LossConfig cfg;
  cfg.tau = 0.3;
  cfg.margin = 0.25;
  cfg.lambda1 = 0.4;
  cfg.lambda2 = 0.8;

  for (int trial = 0; trial < 8; ++trial) {
    const int n = (trial % 2 == 0) ? 4 : 6;
    const MatrixXd z0 = rand_embeddings(rng, n, 5);

    // gc w.r.t. embeddings
    auto gc_fwd = [&cfg](const ad::Mat& zv) {
      ad::Graph g;
      return vqa::lossgraph::gc_loss(g.leaf(zv), cfg).scalar();
    };
    ad::Mat gc_grad;
    {
      ad::Graph g;
      ad::Var z = g.leaf(z0);
      ad::Var loss = vqa::lossgraph::gc_loss(z, cfg);
      g.backward(loss);
      gc_grad = z.grad();
    }
    CHECK(vqa::testsupport::gradcheck_max_err(gc_fwd, z0, gc_grad) < 1e-4);

    // rank / mse / l1 / total w.r.t. predictions, away from hinge kinks
    const VectorXd labels = randv(rng, n);
    VectorXd preds = randv(rng, n);
    const auto pairs = vqa::all_index_pairs(n);
    for (auto [i, j] : pairs) {
      // nudge any pair sitting near the hinge kink
      while (std::abs(cfg.margin - (preds[i] - preds[j]) * (labels[i] - labels[j])) < 1e-3 ||
             std::abs(preds[i] - labels[i]) < 1e-3) {
        preds[i] += 0.01;
      }
    }

    auto total_fwd = [&](const std::vector<ad::Mat>& xs) {
      ad::Graph g;
      return vqa::lossgraph::total_loss(g.leaf(xs[0]), g.leaf(xs[1]), labels, cfg).total.scalar();
    };
    std::vector<ad::Mat> analytic;
    {
      ad::Graph g;
      ad::Var z = g.leaf(z0);
      ad::Var pv = g.leaf(preds);
      auto nodes = vqa::lossgraph::total_loss(z, pv, labels, cfg);
      g.backward(nodes.total);
      analytic = {z.grad(), pv.grad()};
    }
    CHECK(vqa::testsupport::gradcheck_max_err(total_fwd, {z0, ad::Mat(preds)}, analytic) < 1e-4);
  }
}
