#include "vqa/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "vqa/errors.hpp"

namespace vqa::ad {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool cond, const std::string& what) {
  if (!cond) throw NumericError("autodiff", what);
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_same_graph(Var a, Var b, const char* op) {
  require(a.valid() && b.valid() && a.g == b.g, std::string(op) + ": vars from different graphs");
}

void push(Graph& g, Var p, const Mat& delta) {
  if (g.needs_grad(p.id)) g.grad_ref(p.id) += delta;
}

}  // namespace

const Mat& Var::value() const { return g->value(*this); }
const Mat& Var::grad() const { return g->grad(*this); }
int Var::rows() const { return static_cast<int>(value().rows()); }
int Var::cols() const { return static_cast<int>(value().cols()); }
double Var::scalar() const {
  const Mat& v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar() on a " + shape_str(v) + " node");
  return v(0, 0);
}

Var Graph::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, false});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, true});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::make(Mat value, const std::vector<Var>& parents, BackwardFn backward) {
  bool rg = false;
  for (const Var& p : parents) {
    require(p.valid() && p.g == this, "op: parent from another graph");
    rg = rg || nodes_[static_cast<std::size_t>(p.id)].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Mat(), rg ? std::move(backward) : nullptr, rg});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Mat& Graph::value(Var v) const {
  require(v.g == this && v.id >= 0 && v.id < size(), "value(): bad var");
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Mat& Graph::grad(Var v) const {
  require(v.g == this && v.id >= 0 && v.id < size(), "grad(): bad var");
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  require(n.grad.size() > 0, "grad(): no gradient was accumulated for this node");
  return n.grad;
}

bool Graph::has_grad(Var v) const {
  require(v.g == this && v.id >= 0 && v.id < size(), "has_grad(): bad var");
  return nodes_[static_cast<std::size_t>(v.id)].grad.size() > 0;
}

Mat& Graph::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var root) {
  require(root.g == this && root.id >= 0 && root.id < size(), "backward(): bad root");
  require(!ran_backward_, "backward(): graph already back-propagated");
  const Node& r = nodes_[static_cast<std::size_t>(root.id)];
  require(r.value.rows() == 1 && r.value.cols() == 1, "backward(): root must be 1x1");
  ran_backward_ = true;
  grad_ref(root.id)(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.requires_grad && n.backward && n.grad.size() > 0) n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
  require_same_graph(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  return a.g->make(a.value() + b.value(), {a, b}, [a, b](Graph& g, const Mat& go) {
    push(g, a, go);
    push(g, b, go);
  });
}

Var sub(Var a, Var b) {
  require_same_graph(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  return a.g->make(a.value() - b.value(), {a, b}, [a, b](Graph& g, const Mat& go) {
    push(g, a, go);
    push(g, b, -go);
  });
}

Var mul(Var a, Var b) {
  require_same_graph(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  return a.g->make(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Graph& g, const Mat& go) {
    push(g, a, go.cwiseProduct(g.val(b.id)));
    push(g, b, go.cwiseProduct(g.val(a.id)));
  });
}

Var neg(Var a) {
  return a.g->make(-a.value(), {a}, [a](Graph& g, const Mat& go) { push(g, a, -go); });
}

Var add_scalar(Var a, double c) {
  return a.g->make(a.value().array() + c, {a}, [a](Graph& g, const Mat& go) { push(g, a, go); });
}

Var mul_scalar(Var a, double c) {
  return a.g->make(a.value() * c, {a}, [a, c](Graph& g, const Mat& go) { push(g, a, go * c); });
}

Var square(Var a) {
  return a.g->make(a.value().array().square(), {a}, [a](Graph& g, const Mat& go) {
    push(g, a, 2.0 * go.cwiseProduct(g.val(a.id)));
  });
}

Var sqrt(Var a) {
  Mat y = a.value().array().sqrt();
  auto back = [a, y](Graph& g, const Mat& go) {
    push(g, a, (go.array() * 0.5 / y.array()).matrix());
  };
  return a.g->make(std::move(y), {a}, std::move(back));
}

Var exp(Var a) {
  Mat y = a.value().array().exp();
  auto back = [a, y](Graph& g, const Mat& go) { push(g, a, go.cwiseProduct(y)); };
  return a.g->make(std::move(y), {a}, std::move(back));
}

Var log(Var a) {
  return a.g->make(a.value().array().log(), {a}, [a](Graph& g, const Mat& go) {
    push(g, a, go.cwiseQuotient(g.val(a.id)));
  });
}

Var recip(Var a) {
  Mat y = a.value().cwiseInverse();
  auto back = [a, y](Graph& g, const Mat& go) { push(g, a, -go.cwiseProduct(y.cwiseProduct(y))); };
  return a.g->make(std::move(y), {a}, std::move(back));
}

Var abs(Var a) {
  return a.g->make(a.value().array().abs(), {a}, [a](Graph& g, const Mat& go) {
    push(g, a, go.cwiseProduct(g.val(a.id).array().sign().matrix()));
  });
}

Var relu(Var a) {
  return a.g->make(a.value().cwiseMax(0.0), {a}, [a](Graph& g, const Mat& go) {
    const Mat mask = (g.val(a.id).array() > 0.0).cast<double>();
    push(g, a, go.cwiseProduct(mask));
  });
}

Var gelu(Var a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  Mat y = a.value().unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
  return a.g->make(std::move(y), {a}, [a](Graph& g, const Mat& go) {
    const Mat d = g.val(a.id).unaryExpr([](double x) {
      return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * std::exp(-0.5 * x * x) * inv_sqrt2pi;
    });
    push(g, a, go.cwiseProduct(d));
  });
}

// ---------------------------------------------------------------------------
// structural
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_graph(a, b, "matmul");
  require(a.cols() == b.rows(), "matmul: inner dims " + shape_str(a.value()) + " * " + shape_str(b.value()));
  return a.g->make(a.value() * b.value(), {a, b}, [a, b](Graph& g, const Mat& go) {
    push(g, a, go * g.val(b.id).transpose());
    push(g, b, g.val(a.id).transpose() * go);
  });
}

Var transpose(Var a) {
  return a.g->make(a.value().transpose(), {a},
                   [a](Graph& g, const Mat& go) { push(g, a, go.transpose()); });
}

Var rowwise_sum(Var a) {
  Mat y = a.value().rowwise().sum();
  const int m = a.cols();
  return a.g->make(std::move(y), {a}, [a, m](Graph& g, const Mat& go) {
    push(g, a, go * Mat::Ones(1, m));
  });
}

Var colwise_sum(Var a) {
  Mat y = a.value().colwise().sum();
  const int n = a.rows();
  return a.g->make(std::move(y), {a}, [a, n](Graph& g, const Mat& go) {
    push(g, a, Mat::Ones(n, 1) * go);
  });
}

Var sum_all(Var a) {
  Mat y(1, 1);
  y(0, 0) = a.value().sum();
  const int n = a.rows(), m = a.cols();
  return a.g->make(std::move(y), {a}, [a, n, m](Graph& g, const Mat& go) {
    push(g, a, Mat::Constant(n, m, go(0, 0)));
  });
}

Var mean_rows(Var a) { return mul_scalar(colwise_sum(a), 1.0 / static_cast<double>(a.rows())); }

Var mean_all(Var a) {
  return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a.rows() * a.cols()));
}

Var slice_rows(Var a, int r0, int n) {
  require(r0 >= 0 && n >= 1 && r0 + n <= a.rows(), "slice_rows: range out of bounds");
  const int m = a.cols();
  return a.g->make(a.value().middleRows(r0, n), {a}, [a, r0, n, m](Graph& g, const Mat& go) {
    if (g.needs_grad(a.id)) g.grad_ref(a.id).middleRows(r0, n) += go;
  });
}

Var slice_cols(Var a, int c0, int n) {
  require(c0 >= 0 && n >= 1 && c0 + n <= a.cols(), "slice_cols: range out of bounds");
  return a.g->make(a.value().middleCols(c0, n), {a}, [a, c0, n](Graph& g, const Mat& go) {
    if (g.needs_grad(a.id)) g.grad_ref(a.id).middleCols(c0, n) += go;
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: empty input");
  const int m = parts.front().cols();
  int n = 0;
  for (const Var& p : parts) {
    require(p.cols() == m, "concat_rows: column mismatch");
    n += p.rows();
  }
  Mat y(n, m);
  int at = 0;
  for (const Var& p : parts) {
    y.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().g->make(std::move(y), parts, [parts](Graph& g, const Mat& go) {
    int at = 0;
    for (const Var& p : parts) {
      const int rows = static_cast<int>(g.val(p.id).rows());
      push(g, p, go.middleRows(at, rows));
      at += rows;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: empty input");
  const int n = parts.front().rows();
  int m = 0;
  for (const Var& p : parts) {
    require(p.rows() == n, "concat_cols: row mismatch");
    m += p.cols();
  }
  Mat y(n, m);
  int at = 0;
  for (const Var& p : parts) {
    y.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().g->make(std::move(y), parts, [parts](Graph& g, const Mat& go) {
    int at = 0;
    for (const Var& p : parts) {
      const int cols = static_cast<int>(g.val(p.id).cols());
      push(g, p, go.middleCols(at, cols));
      at += cols;
    }
  });
}

// ---------------------------------------------------------------------------
// broadcasts
// ---------------------------------------------------------------------------

Var scale_rows(Var x, Var s) {
  require_same_graph(x, s, "scale_rows");
  require(s.rows() == x.rows() && s.cols() == 1, "scale_rows: scale must be n x 1");
  Mat y = x.value().array().colwise() * s.value().col(0).array();
  return x.g->make(std::move(y), {x, s}, [x, s](Graph& g, const Mat& go) {
    push(g, x, (go.array().colwise() * g.val(s.id).col(0).array()).matrix());
    push(g, s, go.cwiseProduct(g.val(x.id)).rowwise().sum());
  });
}

Var scale_cols(Var x, Var s) {
  require_same_graph(x, s, "scale_cols");
  require(s.cols() == x.cols() && s.rows() == 1, "scale_cols: scale must be 1 x m");
  Mat y = x.value().array().rowwise() * s.value().row(0).array();
  return x.g->make(std::move(y), {x, s}, [x, s](Graph& g, const Mat& go) {
    push(g, x, (go.array().rowwise() * g.val(s.id).row(0).array()).matrix());
    push(g, s, go.cwiseProduct(g.val(x.id)).colwise().sum());
  });
}

Var add_col_broadcast(Var x, Var c) {
  require_same_graph(x, c, "add_col_broadcast");
  require(c.rows() == x.rows() && c.cols() == 1, "add_col_broadcast: addend must be n x 1");
  Mat y = x.value().array().colwise() + c.value().col(0).array();
  return x.g->make(std::move(y), {x, c}, [x, c](Graph& g, const Mat& go) {
    push(g, x, go);
    push(g, c, go.rowwise().sum());
  });
}

Var add_row_broadcast(Var x, Var b) {
  require_same_graph(x, b, "add_row_broadcast");
  require(b.cols() == x.cols() && b.rows() == 1, "add_row_broadcast: addend must be 1 x m");
  Mat y = x.value().array().rowwise() + b.value().row(0).array();
  return x.g->make(std::move(y), {x, b}, [x, b](Graph& g, const Mat& go) {
    push(g, x, go);
    push(g, b, go.colwise().sum());
  });
}

Var scale_by_scalar(Var x, Var s) {
  require_same_graph(x, s, "scale_by_scalar");
  require(s.rows() == 1 && s.cols() == 1, "scale_by_scalar: scale must be 1 x 1");
  return x.g->make(x.value() * s.value()(0, 0), {x, s}, [x, s](Graph& g, const Mat& go) {
    push(g, x, go * g.val(s.id)(0, 0));
    if (g.needs_grad(s.id)) g.grad_ref(s.id)(0, 0) += go.cwiseProduct(g.val(x.id)).sum();
  });
}

// ---------------------------------------------------------------------------
// composites
// ---------------------------------------------------------------------------

Var softmax_rows(Var x) {
  // The max shift is detached; it cancels in the softmax value and gradient.
  Mat shift = -x.value().rowwise().maxCoeff();
  Var e = exp(add_col_broadcast(x, x.g->constant(std::move(shift))));
  return scale_rows(e, recip(rowwise_sum(e)));
}

Var logsumexp_row(Var x) {
  require(x.rows() == 1, "logsumexp_row: input must be 1 x k");
  const double m = x.value().maxCoeff();
  Var e = exp(add_scalar(x, -m));
  return add_scalar(log(sum_all(e)), m);
}

Var l2_normalize_rows(Var x, double eps) {
  // sqrt is taken at (sum + eps^2) so a zero row back-propagates cleanly.
  Var norm = sqrt(add_scalar(rowwise_sum(square(x)), eps * eps));
  return scale_rows(x, recip(add_scalar(norm, eps)));
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const double d = static_cast<double>(x.cols());
  Var mu = mul_scalar(rowwise_sum(x), 1.0 / d);
  Var centered = add_col_broadcast(x, neg(mu));
  Var variance = mul_scalar(rowwise_sum(square(centered)), 1.0 / d);
  Var inv_std = recip(sqrt(add_scalar(variance, eps)));
  Var normed = scale_rows(centered, inv_std);
  return add_row_broadcast(scale_cols(normed, gain), bias);
}

Var dot(Var a, Var b) { return sum_all(mul(a, b)); }

}  // namespace vqa::ad
