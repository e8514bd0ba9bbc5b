#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "vqa/autodiff.hpp"
#include "vqa/rng.hpp"

namespace vqa {

// Named parameter tensors in stable registration order.
class ParamStore {
 public:
  Eigen::MatrixXd& create(const std::string& name, int rows, int cols);
  bool has(const std::string& name) const { return values_.count(name) > 0; }
  Eigen::MatrixXd& at(const std::string& name);
  const Eigen::MatrixXd& at(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  std::size_t coefficient_count() const;

 private:
  std::map<std::string, Eigen::MatrixXd> values_;
  std::vector<std::string> order_;
};

// Binds parameters into one graph (one forward/backward pass). Each parameter
// becomes a single tracked leaf, reused on repeated lookups.
class ParamBinding {
 public:
  ParamBinding(ad::Graph& graph, const ParamStore& store) : g_(&graph), store_(&store) {}

  ad::Graph& graph() { return *g_; }
  ad::Var param(const std::string& name);
  const std::map<std::string, ad::Var>& bound() const { return bound_; }

 private:
  ad::Graph* g_;
  const ParamStore* store_;
  std::map<std::string, ad::Var> bound_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive moment estimation over a ParamStore. Parameters without a gradient
// in the step (unused branches) are left untouched.
class Adam {
 public:
  explicit Adam(ParamStore& store, AdamConfig cfg = {}) : store_(&store), cfg_(cfg) {}

  // clip_norm <= 0 disables clipping. Returns the pre-clip global norm.
  double step(const ParamBinding& binding, double lr, double clip_norm);

  long step_count() const { return t_; }

  // checkpoint surface
  std::map<std::string, Eigen::MatrixXd>& first_moments() { return m_; }
  std::map<std::string, Eigen::MatrixXd>& second_moments() { return v_; }
  const std::map<std::string, Eigen::MatrixXd>& first_moments() const { return m_; }
  const std::map<std::string, Eigen::MatrixXd>& second_moments() const { return v_; }
  void set_step_count(long t) { t_ = t; }

 private:
  ParamStore* store_;
  AdamConfig cfg_;
  std::map<std::string, Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

// Weight initializers.
void init_xavier_normal(Eigen::MatrixXd& w, Rng& rng);
void init_normal(Eigen::MatrixXd& w, Rng& rng, double stddev);

}  // namespace vqa
