// Reverse-mode autodiff over Eigen matrices.
//
// A Graph is a tape of nodes created in topological order; backward() walks
// the tape in reverse, each node accumulating gradient into its operands.
// Values are dense double matrices; scalars are 1x1. Sequences are stored
// row-major: row = position, column = feature.

#ifndef CAST_GRAPH_HPP
#define CAST_GRAPH_HPP

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cast/common.hpp"

namespace cast::nn {

using Mat = Eigen::MatrixXd;

class Graph;

// Handle into a Graph. Cheap to copy; valid for the graph's lifetime.
struct Var {
  Graph* g = nullptr;
  int id = -1;
  bool valid() const { return g != nullptr && id >= 0; }
};

// Trainable tensor. Gradient accumulates across backward passes until
// cleared; the optimizer consumes and clears it.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)),
        grad(Mat::Zero(value.rows(), value.cols())) {}
};

class Graph {
 public:
  // self_grad is the node's accumulated output gradient
  using BackFn = std::function<void(Graph&, const Mat& self_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Mat value);
  // Leaf whose gradient flows into p.grad; one node per parameter per
  // graph (repeated calls return the cached leaf).
  Var param(Parameter& p);

  const Mat& value(const Var& v) const { return value_of(v.id); }
  // Zero matrix when no gradient reached the node.
  Mat grad(const Var& v) const;

  // Seeds d(scalar)/d(scalar)=1 and propagates to every node and bound
  // parameter. `scalar` must be 1x1.
  void backward(const Var& scalar);

  std::size_t size() const { return nodes_.size(); }

  // low-level access for op implementations
  Var make(Mat value, BackFn back);
  const Mat& value_of(int id) const { return nodes_[std::size_t(id)].value; }
  void add_grad(int id, const Mat& g);
  // in-place accumulation for scatter-style backwards
  template <typename Fn>
  void accum_grad(int id, Fn&& fn) {
    Node& n = nodes_[std::size_t(id)];
    if (n.grad.size() == 0)
      n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    fn(n.grad);
  }

 private:
  struct Node {
    Mat value;
    Mat grad;  // 0x0 until a gradient is accumulated
    BackFn back;
    Parameter* bound = nullptr;
  };

  std::deque<Node> nodes_;
  std::map<const Parameter*, int> param_nodes_;
};

// ---- op library ------------------------------------------------------

Var add(Var a, Var b);                 // same shape
Var sub(Var a, Var b);
Var add_rowvec(Var a, Var row);        // broadcast 1xD over rows of a
Var cmult(Var a, Var b);               // elementwise product
Var scale(Var a, double s);
Var shift(Var a, double s);            // a + s elementwise
Var matmul(Var a, Var b);              // A * B
Var matmul_nt(Var a, Var b);           // A * B^T
Var rows(Var a, const IdSeq& idx);     // gather rows (embedding lookup)
Var slice_rows(Var a, int r0, int n);
Var slice_cols(Var a, int c0, int n);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var softmax_rows(Var a);               // per-row, numerically stabilized
Var log_softmax_rows(Var a);
Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var layer_norm_rows(Var a, Var gain, Var bias);  // gain/bias are 1xD
Var sum_all(Var a);                    // -> 1x1
Var mean_rows(Var a);                  // -> 1xD column means
Var max_rows(Var a);                   // -> 1xD column maxima (argmax backward)
Var pick_elems(Var a, const IdSeq& cols);  // -> Lx1, element a(i, cols[i])
Var windows_rows(Var a, int width);    // -> (L-w+1) x (w*D) sliding windows
Var stop_gradient(Var a);
// Forward takes `forward_value`; gradient flows entirely into `surrogate`.
Var straight_through(Mat forward_value, Var surrogate);

// x * W + b broadcast over rows
inline Var linear(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

inline double scalar_value(const Var& v) {
  const Mat& m = v.g->value(v);
  if (m.rows() != 1 || m.cols() != 1)
    throw std::logic_error("scalar_value on non-scalar");
  return m(0, 0);
}

}  // namespace cast::nn

#endif  // CAST_GRAPH_HPP
