#include "vqa/losses.hpp"

#include <cmath>
#include <string>

#include "vqa/errors.hpp"

namespace vqa {

namespace {

// Group layout shared by the contrastive terms. All indices are 0-based:
// batch group A is [0, a), group B is [a, N); the second double-sum of the
// summed loss ranges over [N - a, N).
struct GroupLayout {
  int n = 0;
  int a = 0;  // p * N

  int b_sum_start() const { return n - a; }

  static GroupLayout resolve(int n, double p) {
    if (n < 2) throw ConfigError("losses", "group contrastive loss needs N >= 2, got N=" + std::to_string(n));
    const double pn = p * static_cast<double>(n);
    const int a = static_cast<int>(std::lround(pn));
    if (std::abs(pn - static_cast<double>(a)) > 1e-9) {
      throw ConfigError("losses", "p*N must be integral (p=" + std::to_string(p) + ", N=" + std::to_string(n) + ")");
    }
    if (a < 1 || a > n - 1) {
      throw ConfigError("losses", "group proportion leaves an empty group (p*N=" + std::to_string(a) + ")");
    }
    if (a > n - a) {
      // The two double-sum ranges would overlap.
      throw ConfigError("losses", "group ranges overlap: p*N=" + std::to_string(a) +
                                      " exceeds (1-p)*N=" + std::to_string(n - a));
    }
    return GroupLayout{n, a};
  }

  bool in_group_a(int i) const { return i < a; }

  // Denominator range for an anchor, as [start, len).
  std::pair<int, int> denominator_range(int i, GcDenominator mode) const {
    if (mode == GcDenominator::literal) return {n - a, a};
    return in_group_a(i) ? std::pair<int, int>{a, n - a} : std::pair<int, int>{0, a};
  }
};

void check_pair_preconditions(int i, int j, const GroupLayout& layout) {
  if (i == j) throw ConfigError("losses", "gc pair term needs i != j");
  if (i < 0 || j < 0 || i >= layout.n || j >= layout.n) {
    throw ConfigError("losses", "gc pair index out of range");
  }
  if (layout.in_group_a(i) != layout.in_group_a(j)) {
    throw ConfigError("losses", "gc pair term is defined within a group; got indices " + std::to_string(i) +
                                    " and " + std::to_string(j) + " across groups");
  }
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError("losses", std::string(what) + " contains a non-finite value");
}

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) { return v; }

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("losses", "tau must be > 0");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("losses", "p must be in (0, 1)");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ConfigError("losses", "margin must be >= 0");
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ConfigError("losses", "lambda1 must be >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ConfigError("losses", "lambda2 must be >= 0");
}

std::vector<IndexPair> all_index_pairs(int n) {
  std::vector<IndexPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_finite(a, "cosine_similarity lhs");
  check_finite(b, "cosine_similarity rhs");
  if (a.size() != b.size()) throw NumericError("losses", "cosine_similarity: dimension mismatch");
  const double eps = lossgraph::kNormEps;
  const double na = std::sqrt(a.squaredNorm() + eps * eps) + eps;
  const double nb = std::sqrt(b.squaredNorm() + eps * eps) + eps;
  return a.dot(b) / (na * nb);
}

double gc_pair_term(int i, int j, const Eigen::MatrixXd& embeddings, const LossConfig& cfg) {
  ad::Graph g;
  ad::Var z = g.constant(embeddings);
  return lossgraph::gc_pair_term(z, i, j, cfg).scalar();
}

double gc_loss(const Eigen::MatrixXd& embeddings, const LossConfig& cfg) {
  ad::Graph g;
  ad::Var z = g.constant(embeddings);
  return lossgraph::gc_loss(z, cfg).scalar();
}

double rank_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels, double margin,
                 const std::vector<IndexPair>& pairs) {
  if (predictions.size() != labels.size()) throw NumericError("losses", "rank_loss: length mismatch");
  check_finite(predictions, "rank_loss predictions");
  check_finite(labels, "rank_loss labels");
  const int n = static_cast<int>(predictions.size());
  double sum = 0.0;
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw NumericError("losses", "rank_loss: pair index out of range");
    const double dp = predictions[i] - predictions[j];
    const double dl = labels[i] - labels[j];
    sum += std::max(0.0, margin - dp * dl);
  }
  return sum;
}

double mse_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels) {
  if (predictions.size() == 0) throw NumericError("losses", "mse_loss: empty input");
  if (predictions.size() != labels.size()) throw NumericError("losses", "mse_loss: length mismatch");
  return (predictions - labels).squaredNorm() / static_cast<double>(predictions.size());
}

double l1_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels) {
  if (predictions.size() == 0) throw NumericError("losses", "l1_loss: empty input");
  if (predictions.size() != labels.size()) throw NumericError("losses", "l1_loss: length mismatch");
  return (predictions - labels).cwiseAbs().sum() / static_cast<double>(predictions.size());
}

LossBreakdown total_loss(const BatchOutputs& outputs, const LossConfig& cfg) {
  cfg.validate();
  const auto n = outputs.predictions.size();
  if (outputs.labels.size() != n || outputs.embeddings.rows() != n) {
    throw NumericError("losses", "total_loss: embeddings/predictions/labels must share length N");
  }
  ad::Graph g;
  ad::Var z = g.constant(outputs.embeddings);
  ad::Var preds = g.constant(as_column(outputs.predictions));
  return lossgraph::total_loss(z, preds, outputs.labels, cfg).breakdown();
}

// ---------------------------------------------------------------------------
// graph builders
// ---------------------------------------------------------------------------

namespace lossgraph {

ad::Var pair_similarity_matrix(ad::Var z) {
  check_finite(z.value(), "embeddings");
  ad::Var zn = ad::l2_normalize_rows(z, kNormEps);
  return ad::matmul(zn, ad::transpose(zn));
}

ad::Var cosine_similarity(ad::Var a, ad::Var b) {
  ad::Var an = ad::l2_normalize_rows(a, kNormEps);
  ad::Var bn = ad::l2_normalize_rows(b, kNormEps);
  return ad::dot(an, bn);
}

namespace {

// exp(sim/tau) ratios are never materialized; every term is kept in log space.
ad::Var pair_term_from_similarities(ad::Var sims, int i, int j, const GroupLayout& layout,
                                    const LossConfig& cfg) {
  ad::Var row = ad::slice_rows(sims, i, 1);
  const auto [start, len] = layout.denominator_range(i, cfg.gc_denominator);
  ad::Var denom = ad::logsumexp_row(ad::mul_scalar(ad::slice_cols(row, start, len), 1.0 / cfg.tau));
  ad::Var num = ad::mul_scalar(ad::slice_cols(row, j, 1), 1.0 / cfg.tau);
  return ad::sub(denom, num);
}

}  // namespace

ad::Var gc_pair_term(ad::Var z, int i, int j, const LossConfig& cfg) {
  cfg.validate();
  const GroupLayout layout = GroupLayout::resolve(static_cast<int>(z.rows()), cfg.p);
  check_pair_preconditions(i, j, layout);
  return pair_term_from_similarities(pair_similarity_matrix(z), i, j, layout, cfg);
}

ad::Var gc_loss(ad::Var z, const LossConfig& cfg) {
  cfg.validate();
  const GroupLayout layout = GroupLayout::resolve(static_cast<int>(z.rows()), cfg.p);
  ad::Var sims = pair_similarity_matrix(z);

  std::vector<ad::Var> terms;
  auto add_group = [&](int start, int count) {
    if (count < 2) return;  // empty double sum
    for (int i = start; i < start + count; ++i) {
      // One log-sum-exp per anchor, shared across the ordered pairs.
      ad::Var row = ad::slice_rows(sims, i, 1);
      const auto [dstart, dlen] = layout.denominator_range(i, cfg.gc_denominator);
      ad::Var denom = ad::logsumexp_row(ad::mul_scalar(ad::slice_cols(row, dstart, dlen), 1.0 / cfg.tau));
      for (int j = start; j < start + count; ++j) {
        if (j == i) continue;
        ad::Var num = ad::mul_scalar(ad::slice_cols(row, j, 1), 1.0 / cfg.tau);
        terms.push_back(ad::sub(denom, num));
      }
    }
  };
  add_group(0, layout.a);
  add_group(layout.b_sum_start(), layout.n - layout.b_sum_start());

  if (terms.empty()) return z.g->constant(ad::Mat::Zero(1, 1));
  return ad::sum_all(ad::concat_rows(terms));
}

ad::Var rank_loss(ad::Var predictions, const Eigen::VectorXd& labels, double margin,
                  const std::vector<IndexPair>& pairs) {
  const int n = static_cast<int>(labels.size());
  if (predictions.rows() != n || predictions.cols() != 1) {
    throw NumericError("losses", "rank_loss: predictions must be N x 1");
  }
  if (pairs.empty()) return predictions.g->constant(ad::Mat::Zero(1, 1));
  std::vector<ad::Var> terms;
  terms.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw NumericError("losses", "rank_loss: pair index out of range");
    ad::Var dp = ad::sub(ad::slice_rows(predictions, i, 1), ad::slice_rows(predictions, j, 1));
    const double dl = labels[i] - labels[j];
    ad::Var arg = ad::add_scalar(ad::mul_scalar(dp, -dl), margin);
    terms.push_back(ad::relu(arg));
  }
  return ad::sum_all(ad::concat_rows(terms));
}

ad::Var mse_loss(ad::Var predictions, const Eigen::VectorXd& labels) {
  if (labels.size() == 0) throw NumericError("losses", "mse_loss: empty input");
  ad::Var target = predictions.g->constant(as_column(labels));
  return ad::mean_all(ad::square(ad::sub(predictions, target)));
}

ad::Var l1_loss(ad::Var predictions, const Eigen::VectorXd& labels) {
  if (labels.size() == 0) throw NumericError("losses", "l1_loss: empty input");
  ad::Var target = predictions.g->constant(as_column(labels));
  return ad::mean_all(ad::abs(ad::sub(predictions, target)));
}

LossBreakdown TotalLossNodes::breakdown() const {
  LossBreakdown b;
  b.mse = mse.scalar();
  b.l1 = l1.scalar();
  b.gc = gc.valid() ? gc.scalar() : 0.0;
  b.rank = rank.valid() ? rank.scalar() : 0.0;
  b.total = total.scalar();
  return b;
}

TotalLossNodes total_loss(ad::Var embeddings, ad::Var predictions, const Eigen::VectorXd& labels,
                          const LossConfig& cfg, ad::Var gc_embeddings) {
  cfg.validate();
  TotalLossNodes nodes;
  nodes.mse = mse_loss(predictions, labels);
  nodes.l1 = l1_loss(predictions, labels);
  ad::Var sum = ad::add(nodes.mse, nodes.l1);
  if (cfg.lambda1 != 0.0) {
    nodes.gc = gc_loss(gc_embeddings.valid() ? gc_embeddings : embeddings, cfg);
    sum = ad::add(sum, ad::mul_scalar(nodes.gc, cfg.lambda1));
  }
  if (cfg.lambda2 != 0.0) {
    nodes.rank = rank_loss(predictions, labels, cfg.margin,
                           all_index_pairs(static_cast<int>(labels.size())));
    sum = ad::add(sum, ad::mul_scalar(nodes.rank, cfg.lambda2));
  }
  nodes.total = sum;
  return nodes;
}

}  // namespace lossgraph

}  // namespace vqa
