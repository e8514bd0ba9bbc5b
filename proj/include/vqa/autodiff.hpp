#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace vqa::ad {

using Mat = Eigen::MatrixXd;

class Graph;

// Handle into a Graph. Valid for the lifetime of the graph that made it.
struct Var {
  Graph* g = nullptr;
  int id = -1;

  bool valid() const { return g != nullptr && id >= 0; }
  const Mat& value() const;
  const Mat& grad() const;
  int rows() const;
  int cols() const;
  double scalar() const;  // value of a 1x1 node
};

// Reverse-mode tape over dense matrices. Nodes are appended in topological
// order, so backward() is a reverse sweep. One backward pass per graph.
class Graph {
 public:
  // Receives the node's accumulated output gradient; pushes into parents.
  using BackwardFn = std::function<void(Graph&, const Mat&)>;

  Var constant(Mat value);
  Var leaf(Mat value);  // gradient-tracked input

  const Mat& value(Var v) const;
  const Mat& grad(Var v) const;
  bool has_grad(Var v) const;  // a gradient reached this node during backward

  // Seeds d(root)/d(root) = 1 and accumulates into every tracked node.
  void backward(Var root);

  int size() const { return static_cast<int>(nodes_.size()); }

  // --- op-implementation surface ---
  Var make(Mat value, const std::vector<Var>& parents, BackwardFn backward);
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  const Mat& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Mat& grad_ref(int id);  // allocates zeros on first touch

 private:
  struct Node {
    Mat value;
    Mat grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

// ---- elementwise ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var add_scalar(Var a, double c);
Var mul_scalar(Var a, double c);
Var square(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var log(Var a);
Var recip(Var a);
Var abs(Var a);
Var relu(Var a);
Var gelu(Var a);

// ---- structural ----
Var matmul(Var a, Var b);
Var transpose(Var a);
Var rowwise_sum(Var a);  // n x m -> n x 1
Var colwise_sum(Var a);  // n x m -> 1 x m
Var sum_all(Var a);      // -> 1 x 1
Var mean_rows(Var a);    // average the rows together: n x m -> 1 x m
Var mean_all(Var a);     // -> 1 x 1
Var slice_rows(Var a, int r0, int n);
Var slice_cols(Var a, int c0, int n);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);

// ---- broadcasts ----
Var scale_rows(Var x, Var s);         // s: n x 1, y_ij = x_ij * s_i
Var scale_cols(Var x, Var s);         // s: 1 x m, y_ij = x_ij * s_j
Var add_col_broadcast(Var x, Var c);  // c: n x 1
Var add_row_broadcast(Var x, Var b);  // b: 1 x m
Var scale_by_scalar(Var x, Var s);    // s: 1 x 1

// ---- composites ----
Var softmax_rows(Var x);  // max-shifted, shift detached
Var logsumexp_row(Var x);                  // 1 x k -> 1 x 1
Var l2_normalize_rows(Var x, double eps);  // rows brought to (eps-guarded) unit norm
Var layer_norm(Var x, Var gain, Var bias, double eps);
Var dot(Var a, Var b);  // same-shape -> 1 x 1

}  // namespace vqa::ad
