#include "cast/graph.hpp"

#include <cmath>

namespace cast::nn {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::logic_error(std::string(op) + ": shape mismatch (" +
                           std::to_string(a.rows()) + "x" +
                           std::to_string(a.cols()) + " vs " +
                           std::to_string(b.rows()) + "x" +
                           std::to_string(b.cols()) + ")");
}

Graph* same_graph(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || a.g != b.g)
    throw std::logic_error(std::string(op) + ": vars from different graphs");
  return a.g;
}

}  // namespace

Var Graph::make(Mat value, BackFn back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, int(nodes_.size()) - 1};
}

Var Graph::constant(Mat value) { return make(std::move(value), {}); }

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.value = p.value;
  n.bound = &p;
  nodes_.push_back(std::move(n));
  const int id = int(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Var{this, id};
}

Mat Graph::grad(const Var& v) const {
  const Node& n = nodes_[std::size_t(v.id)];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::add_grad(int id, const Mat& g) {
  Node& n = nodes_[std::size_t(id)];
  check_same_shape(n.value, g, "add_grad");
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Graph::backward(const Var& scalar) {
  if (!scalar.valid() || scalar.g != this)
    throw std::logic_error("backward: var does not belong to this graph");
  const Mat& v = nodes_[std::size_t(scalar.id)].value;
  if (v.rows() != 1 || v.cols() != 1)
    throw std::logic_error("backward: loss must be a 1x1 scalar");

  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[std::size_t(scalar.id)].grad = Mat::Ones(1, 1);

  // reverse creation order is a valid topological order; nodes that never
  // received gradient are dead and skipped
  for (int i = scalar.id; i >= 0; --i) {
    Node& n = nodes_[std::size_t(i)];
    if (n.grad.size() == 0) continue;
    if (n.back) n.back(*this, n.grad);
    if (n.bound) n.bound->grad += n.grad;
  }
}

// ---- ops ---------------------------------------------------------------

Var add(Var a, Var b) {
  Graph* g = same_graph(a, b, "add");
  check_same_shape(g->value(a), g->value(b), "add");
  int ia = a.id, ib = b.id;
  return g->make(g->value(a) + g->value(b),
                 [ia, ib](Graph& gr, const Mat& d) {
                   gr.add_grad(ia, d);
                   gr.add_grad(ib, d);
                 });
}

Var sub(Var a, Var b) {
  Graph* g = same_graph(a, b, "sub");
  check_same_shape(g->value(a), g->value(b), "sub");
  int ia = a.id, ib = b.id;
  return g->make(g->value(a) - g->value(b),
                 [ia, ib](Graph& gr, const Mat& d) {
                   gr.add_grad(ia, d);
                   gr.add_grad(ib, -d);
                 });
}

Var add_rowvec(Var a, Var row) {
  Graph* g = same_graph(a, row, "add_rowvec");
  const Mat& av = g->value(a);
  const Mat& rv = g->value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw std::logic_error("add_rowvec: row must be 1 x cols(a)");
  Mat out = av.rowwise() + rv.row(0);
  int ia = a.id, ir = row.id;
  return g->make(std::move(out), [ia, ir](Graph& gr, const Mat& d) {
    gr.add_grad(ia, d);
    gr.add_grad(ir, d.colwise().sum());
  });
}

Var cmult(Var a, Var b) {
  Graph* g = same_graph(a, b, "cmult");
  check_same_shape(g->value(a), g->value(b), "cmult");
  int ia = a.id, ib = b.id;
  return g->make(g->value(a).cwiseProduct(g->value(b)),
                 [ia, ib](Graph& gr, const Mat& d) {
                   gr.add_grad(ia, d.cwiseProduct(gr.value_of(ib)));
                   gr.add_grad(ib, d.cwiseProduct(gr.value_of(ia)));
                 });
}

Var scale(Var a, double s) {
  Graph* g = a.g;
  int ia = a.id;
  return g->make(g->value(a) * s, [ia, s](Graph& gr, const Mat& d) {
    gr.add_grad(ia, d * s);
  });
}

Var shift(Var a, double s) {
  Graph* g = a.g;
  int ia = a.id;
  return g->make(Mat(g->value(a).array() + s), [ia](Graph& gr, const Mat& d) {
    gr.add_grad(ia, d);
  });
}

Var matmul(Var a, Var b) {
  Graph* g = same_graph(a, b, "matmul");
  const Mat& av = g->value(a);
  const Mat& bv = g->value(b);
  if (av.cols() != bv.rows()) throw std::logic_error("matmul: inner dims differ");
  int ia = a.id, ib = b.id;
  return g->make(av * bv, [ia, ib](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) {
      acc.noalias() += d * gr.value_of(ib).transpose();
    });
    gr.accum_grad(ib, [&](Mat& acc) {
      acc.noalias() += gr.value_of(ia).transpose() * d;
    });
  });
}

Var matmul_nt(Var a, Var b) {
  Graph* g = same_graph(a, b, "matmul_nt");
  const Mat& av = g->value(a);
  const Mat& bv = g->value(b);
  if (av.cols() != bv.cols())
    throw std::logic_error("matmul_nt: inner dims differ");
  int ia = a.id, ib = b.id;
  return g->make(av * bv.transpose(), [ia, ib](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) { acc.noalias() += d * gr.value_of(ib); });
    gr.accum_grad(ib, [&](Mat& acc) {
      acc.noalias() += d.transpose() * gr.value_of(ia);
    });
  });
}

Var rows(Var a, const IdSeq& idx) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  Mat out(std::ptrdiff_t(idx.size()), av.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= av.rows())
      throw std::out_of_range("rows: index " + std::to_string(idx[i]) +
                              " out of range");
    out.row(std::ptrdiff_t(i)) = av.row(idx[i]);
  }
  int ia = a.id;
  IdSeq copy = idx;
  return g->make(std::move(out), [ia, copy](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) {
      for (std::size_t i = 0; i < copy.size(); ++i)
        acc.row(copy[i]) += d.row(std::ptrdiff_t(i));
    });
  });
}

Var slice_rows(Var a, int r0, int n) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  if (r0 < 0 || n < 0 || r0 + n > av.rows())
    throw std::logic_error("slice_rows: out of range");
  int ia = a.id;
  return g->make(av.middleRows(r0, n), [ia, r0, n](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) { acc.middleRows(r0, n) += d; });
  });
}

Var slice_cols(Var a, int c0, int n) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  if (c0 < 0 || n < 0 || c0 + n > av.cols())
    throw std::logic_error("slice_cols: out of range");
  int ia = a.id;
  return g->make(av.middleCols(c0, n), [ia, c0, n](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) { acc.middleCols(c0, n) += d; });
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::logic_error("concat_rows: no parts");
  Graph* g = parts[0].g;
  std::ptrdiff_t total = 0;
  const std::ptrdiff_t cols = g->value(parts[0]).cols();
  for (const Var& p : parts) {
    if (p.g != g) throw std::logic_error("concat_rows: graphs differ");
    if (g->value(p).cols() != cols)
      throw std::logic_error("concat_rows: column mismatch");
    total += g->value(p).rows();
  }
  Mat out(total, cols);
  std::ptrdiff_t r = 0;
  std::vector<std::pair<int, std::ptrdiff_t>> spans;  // (id, rows)
  for (const Var& p : parts) {
    const Mat& pv = g->value(p);
    out.middleRows(r, pv.rows()) = pv;
    spans.emplace_back(p.id, pv.rows());
    r += pv.rows();
  }
  return g->make(std::move(out), [spans](Graph& gr, const Mat& d) {
    std::ptrdiff_t at = 0;
    for (auto [id, n] : spans) {
      gr.accum_grad(id, [&](Mat& acc) { acc += d.middleRows(at, n); });
      at += n;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::logic_error("concat_cols: no parts");
  Graph* g = parts[0].g;
  std::ptrdiff_t total = 0;
  const std::ptrdiff_t rws = g->value(parts[0]).rows();
  for (const Var& p : parts) {
    if (p.g != g) throw std::logic_error("concat_cols: graphs differ");
    if (g->value(p).rows() != rws)
      throw std::logic_error("concat_cols: row mismatch");
    total += g->value(p).cols();
  }
  Mat out(rws, total);
  std::ptrdiff_t c = 0;
  std::vector<std::pair<int, std::ptrdiff_t>> spans;
  for (const Var& p : parts) {
    const Mat& pv = g->value(p);
    out.middleCols(c, pv.cols()) = pv;
    spans.emplace_back(p.id, pv.cols());
    c += pv.cols();
  }
  return g->make(std::move(out), [spans](Graph& gr, const Mat& d) {
    std::ptrdiff_t at = 0;
    for (auto [id, n] : spans) {
      gr.accum_grad(id, [&](Mat& acc) { acc += d.middleCols(at, n); });
      at += n;
    }
  });
}

namespace {
Mat softmax_value(const Mat& a) {
  Mat out(a.rows(), a.cols());
  for (std::ptrdiff_t r = 0; r < a.rows(); ++r) {
    const double mx = a.row(r).maxCoeff();
    Eigen::ArrayXd e = (a.row(r).array() - mx).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}
}  // namespace

Var softmax_rows(Var a) {
  Graph* g = a.g;
  Mat y = softmax_value(g->value(a));
  int ia = a.id;
  Mat ycopy = y;
  return g->make(std::move(y), [ia, ycopy](Graph& gr, const Mat& d) {
    Mat dx(d.rows(), d.cols());
    for (std::ptrdiff_t r = 0; r < d.rows(); ++r) {
      const double dot = d.row(r).dot(ycopy.row(r));
      dx.row(r) =
          ycopy.row(r).cwiseProduct(d.row(r) - Mat::Constant(1, d.cols(), dot));
    }
    gr.add_grad(ia, dx);
  });
}

Var log_softmax_rows(Var a) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  Mat y(av.rows(), av.cols());
  for (std::ptrdiff_t r = 0; r < av.rows(); ++r) {
    const double mx = av.row(r).maxCoeff();
    const double lse =
        mx + std::log((av.row(r).array() - mx).exp().sum());
    y.row(r) = (av.row(r).array() - lse).matrix();
  }
  int ia = a.id;
  Mat probs = y.array().exp().matrix();
  return g->make(std::move(y), [ia, probs](Graph& gr, const Mat& d) {
    Mat dx(d.rows(), d.cols());
    for (std::ptrdiff_t r = 0; r < d.rows(); ++r) {
      const double rowsum = d.row(r).sum();
      dx.row(r) = d.row(r) - probs.row(r) * rowsum;
    }
    gr.add_grad(ia, dx);
  });
}

Var tanh(Var a) {
  Graph* g = a.g;
  Mat y = g->value(a).array().tanh().matrix();
  int ia = a.id;
  Mat ycopy = y;
  return g->make(std::move(y), [ia, ycopy](Graph& gr, const Mat& d) {
    gr.add_grad(ia, d.cwiseProduct((1.0 - ycopy.array().square()).matrix()));
  });
}

Var relu(Var a) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  Mat y = av.cwiseMax(0.0);
  int ia = a.id;
  Mat mask = (av.array() > 0.0).cast<double>().matrix();
  return g->make(std::move(y), [ia, mask](Graph& gr, const Mat& d) {
    gr.add_grad(ia, d.cwiseProduct(mask));
  });
}

Var sigmoid(Var a) {
  Graph* g = a.g;
  Mat y = (1.0 / (1.0 + (-g->value(a).array()).exp())).matrix();
  int ia = a.id;
  Mat ycopy = y;
  return g->make(std::move(y), [ia, ycopy](Graph& gr, const Mat& d) {
    gr.add_grad(
        ia, d.cwiseProduct(ycopy.cwiseProduct((1.0 - ycopy.array()).matrix())));
  });
}

Var layer_norm_rows(Var a, Var gain, Var bias) {
  Graph* g = same_graph(a, gain, "layer_norm_rows");
  same_graph(gain, bias, "layer_norm_rows");
  const Mat& av = g->value(a);
  const Mat& gv = g->value(gain);
  const Mat& bv = g->value(bias);
  if (gv.rows() != 1 || bv.rows() != 1 || gv.cols() != av.cols() ||
      bv.cols() != av.cols())
    throw std::logic_error("layer_norm_rows: gain/bias must be 1 x cols(a)");
  constexpr double kEps = 1e-6;
  const std::ptrdiff_t d_cols = av.cols();
  Mat xhat(av.rows(), d_cols);
  Eigen::ArrayXd inv_sigma(av.rows());
  for (std::ptrdiff_t r = 0; r < av.rows(); ++r) {
    const double mu = av.row(r).mean();
    const double var =
        (av.row(r).array() - mu).square().sum() / double(d_cols);
    const double is = 1.0 / std::sqrt(var + kEps);
    inv_sigma(r) = is;
    xhat.row(r) = ((av.row(r).array() - mu) * is).matrix();
  }
  Mat out = (xhat.array().rowwise() * gv.row(0).array()).matrix();
  out.rowwise() += bv.row(0);
  int ia = a.id, ig = gain.id, ib = bias.id;
  return g->make(std::move(out),
                 [ia, ig, ib, xhat, inv_sigma](Graph& gr, const Mat& d) {
                   const Mat& gv2 = gr.value_of(ig);
                   const std::ptrdiff_t n = d.cols();
                   Mat dxhat =
                       (d.array().rowwise() * gv2.row(0).array()).matrix();
                   Mat dx(d.rows(), n);
                   for (std::ptrdiff_t r = 0; r < d.rows(); ++r) {
                     const double m1 = dxhat.row(r).mean();
                     const double m2 =
                         dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                     dx.row(r) = ((dxhat.row(r).array() - m1 -
                                   xhat.row(r).array() * m2) *
                                  inv_sigma(r))
                                     .matrix();
                   }
                   gr.add_grad(ia, dx);
                   gr.add_grad(ig, d.cwiseProduct(xhat).colwise().sum());
                   gr.add_grad(ib, d.colwise().sum());
                 });
}

Var sum_all(Var a) {
  Graph* g = a.g;
  Mat out(1, 1);
  out(0, 0) = g->value(a).sum();
  int ia = a.id;
  return g->make(std::move(out), [ia](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) { acc.array() += d(0, 0); });
  });
}

Var mean_rows(Var a) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  if (av.rows() == 0) throw std::logic_error("mean_rows: empty input");
  Mat out = av.colwise().mean();
  int ia = a.id;
  const double inv = 1.0 / double(av.rows());
  return g->make(std::move(out), [ia, inv](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) {
      acc.noalias() += (Mat::Ones(acc.rows(), 1) * d) * inv;
    });
  });
}

Var max_rows(Var a) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  if (av.rows() == 0) throw std::logic_error("max_rows: empty input");
  Mat out(1, av.cols());
  std::vector<std::ptrdiff_t> argmax(std::size_t(av.cols()));
  for (std::ptrdiff_t c = 0; c < av.cols(); ++c) {
    std::ptrdiff_t best = 0;
    for (std::ptrdiff_t r = 1; r < av.rows(); ++r)
      if (av(r, c) > av(best, c)) best = r;
    argmax[std::size_t(c)] = best;
    out(0, c) = av(best, c);
  }
  int ia = a.id;
  return g->make(std::move(out), [ia, argmax](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) {
      for (std::ptrdiff_t c = 0; c < d.cols(); ++c)
        acc(argmax[std::size_t(c)], c) += d(0, c);
    });
  });
}

Var pick_elems(Var a, const IdSeq& cols) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  if (std::ptrdiff_t(cols.size()) != av.rows())
    throw std::logic_error("pick_elems: one column index per row required");
  Mat out(av.rows(), 1);
  for (std::ptrdiff_t r = 0; r < av.rows(); ++r) {
    int c = cols[std::size_t(r)];
    if (c < 0 || c >= av.cols())
      throw std::out_of_range("pick_elems: column out of range");
    out(r, 0) = av(r, c);
  }
  int ia = a.id;
  IdSeq copy = cols;
  return g->make(std::move(out), [ia, copy](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) {
      for (std::ptrdiff_t r = 0; r < d.rows(); ++r)
        acc(r, copy[std::size_t(r)]) += d(r, 0);
    });
  });
}

Var windows_rows(Var a, int width) {
  Graph* g = a.g;
  const Mat& av = g->value(a);
  if (width < 1 || av.rows() < width)
    throw std::logic_error("windows_rows: width must be in [1, rows]");
  const std::ptrdiff_t n = av.rows() - width + 1;
  const std::ptrdiff_t d_cols = av.cols();
  Mat out(n, width * d_cols);
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (int w = 0; w < width; ++w)
      out.block(i, w * d_cols, 1, d_cols) = av.row(i + w);
  int ia = a.id;
  return g->make(std::move(out), [ia, width, d_cols](Graph& gr, const Mat& d) {
    gr.accum_grad(ia, [&](Mat& acc) {
      for (std::ptrdiff_t i = 0; i < d.rows(); ++i)
        for (int w = 0; w < width; ++w)
          acc.row(i + w) += d.block(i, w * d_cols, 1, d_cols);
    });
  });
}

Var stop_gradient(Var a) {
  Graph* g = a.g;
  return g->make(g->value(a), {});
}

Var straight_through(Mat forward_value, Var surrogate) {
  Graph* g = surrogate.g;
  check_same_shape(forward_value, g->value(surrogate), "straight_through");
  int is = surrogate.id;
  return g->make(std::move(forward_value), [is](Graph& gr, const Mat& d) {
    gr.add_grad(is, d);
  });
}

}  // namespace cast::nn
