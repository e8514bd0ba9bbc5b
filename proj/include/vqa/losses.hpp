#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "vqa/autodiff.hpp"

namespace vqa {

// How the contrastive denominator is ranged. `opposing` sums over the group
// opposite the anchor's; `literal` keeps the fixed upper-group range for every
// anchor, kept for comparison runs.
enum class GcDenominator { opposing, literal };

// Whether the group contrastive term consumes video-level or frame-level
// embeddings during training.
enum class GcLevel { video, frame };

struct LossConfig {
  double tau = 0.1;       // temperature
  double p = 0.5;         // group proportion
  double margin = 5.0;    // rank hinge margin
  double lambda1 = 0.1;   // group contrastive weight
  double lambda2 = 1.0;   // rank weight
  GcDenominator gc_denominator = GcDenominator::opposing;
  GcLevel gc_level = GcLevel::video;

  void validate() const;  // throws ConfigError
};

// Per-batch model outputs in batch order (first p*N rows are group A).
struct BatchOutputs {
  Eigen::MatrixXd embeddings;   // N x D
  Eigen::VectorXd predictions;  // N
  Eigen::VectorXd labels;       // N
};

struct LossBreakdown {
  double mse = 0.0;
  double l1 = 0.0;
  double gc = 0.0;    // unweighted; 0 when lambda1 == 0 (term skipped)
  double rank = 0.0;  // unweighted; 0 when lambda2 == 0 (term skipped)
  double total = 0.0;
};

using IndexPair = std::pair<int, int>;

// Every unordered pair (i < j) over [0, n).
std::vector<IndexPair> all_index_pairs(int n);

// ---- plain numeric operations ----
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double gc_pair_term(int i, int j, const Eigen::MatrixXd& embeddings, const LossConfig& cfg);
double gc_loss(const Eigen::MatrixXd& embeddings, const LossConfig& cfg);
double rank_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels, double margin,
                 const std::vector<IndexPair>& pairs);
double mse_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels);
double l1_loss(const Eigen::VectorXd& predictions, const Eigen::VectorXd& labels);
LossBreakdown total_loss(const BatchOutputs& outputs, const LossConfig& cfg);

// ---- graph-building counterparts (the training path) ----
namespace lossgraph {

constexpr double kNormEps = 1e-12;

// Cosine similarities between all row pairs of z: N x D -> N x N.
ad::Var pair_similarity_matrix(ad::Var z);
ad::Var cosine_similarity(ad::Var a, ad::Var b);  // 1 x D rows -> 1 x 1
ad::Var gc_pair_term(ad::Var z, int i, int j, const LossConfig& cfg);
ad::Var gc_loss(ad::Var z, const LossConfig& cfg);
ad::Var rank_loss(ad::Var predictions, const Eigen::VectorXd& labels, double margin,
                  const std::vector<IndexPair>& pairs);
ad::Var mse_loss(ad::Var predictions, const Eigen::VectorXd& labels);
ad::Var l1_loss(ad::Var predictions, const Eigen::VectorXd& labels);

struct TotalLossNodes {
  ad::Var mse;
  ad::Var l1;
  ad::Var gc;    // invalid when lambda1 == 0
  ad::Var rank;  // invalid when lambda2 == 0
  ad::Var total;

  LossBreakdown breakdown() const;
};

// gc_embeddings lets the trainer substitute frame-level embeddings; when
// invalid, outputs-level embeddings feed the contrastive term.
TotalLossNodes total_loss(ad::Var embeddings, ad::Var predictions, const Eigen::VectorXd& labels,
                          const LossConfig& cfg, ad::Var gc_embeddings = {});

}  // namespace lossgraph

}  // namespace vqa
