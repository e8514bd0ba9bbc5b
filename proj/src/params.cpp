#include "vqa/params.hpp"

#include <cmath>

#include "vqa/errors.hpp"

namespace vqa {

Eigen::MatrixXd& ParamStore::create(const std::string& name, int rows, int cols) {
  if (values_.count(name)) throw ConfigError("params", "duplicate parameter '" + name + "'");
  order_.push_back(name);
  return values_[name] = Eigen::MatrixXd::Zero(rows, cols);
}

Eigen::MatrixXd& ParamStore::at(const std::string& name) {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("params", "unknown parameter '" + name + "'");
  return it->second;
}

const Eigen::MatrixXd& ParamStore::at(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("params", "unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::coefficient_count() const {
  std::size_t n = 0;
  for (const auto& [name, value] : values_) n += static_cast<std::size_t>(value.size());
  return n;
}

ad::Var ParamBinding::param(const std::string& name) {
  const auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const ad::Var v = g_->leaf(store_->at(name));
  bound_.emplace(name, v);
  return v;
}

double Adam::step(const ParamBinding& binding, double lr, double clip_norm) {
  // collect gradients; a parameter bound but unreached by backward has none
  std::vector<std::pair<std::string, Eigen::MatrixXd>> grads;
  double sq_norm = 0.0;
  for (const auto& [name, var] : binding.bound()) {
    if (!var.g->has_grad(var)) continue;
    grads.emplace_back(name, var.grad());
    if (!grads.back().second.allFinite()) {
      throw NumericError("optimizer", "non-finite gradient for '" + name + "'");
    }
    sq_norm += grads.back().second.squaredNorm();
  }
  const double norm = std::sqrt(sq_norm);
  const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, grad] : grads) {
    if (scale != 1.0) grad *= scale;
    auto& value = store_->at(name);
    auto m = m_.find(name);
    if (m == m_.end()) m = m_.emplace(name, Eigen::MatrixXd::Zero(value.rows(), value.cols())).first;
    auto v = v_.find(name);
    if (v == v_.end()) v = v_.emplace(name, Eigen::MatrixXd::Zero(value.rows(), value.cols())).first;

    m->second = cfg_.beta1 * m->second + (1.0 - cfg_.beta1) * grad;
    v->second = cfg_.beta2 * v->second + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const Eigen::MatrixXd mhat = m->second / bc1;
    const Eigen::MatrixXd vhat = v->second / bc2;
    value.array() -= lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
  }
  return norm;
}

void init_xavier_normal(Eigen::MatrixXd& w, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(w.rows() + w.cols()));
  init_normal(w, rng, stddev);
}

void init_normal(Eigen::MatrixXd& w, Rng& rng, double stddev) {
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) w(i, j) = stddev * rng.normal();
}

}  // namespace vqa
