// SPDX-License-Identifier: Apache-2.0
#include "tensor.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace tsc::nn {

namespace {

constexpr double kBceEps = 1e-7;

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + std::to_string(a.rows) + "x" +
                                            std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                            std::to_string(b.cols));
}

}  // namespace

Graph::Node& Graph::push(Op op, int rows, int cols) {
  if (used_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[used_++];
  n.op = op;
  n.a = n.b = n.c = -1;
  n.i0 = n.i1 = 0;
  n.k = 0.0;
  n.needs_grad = false;
  n.store = nullptr;
  n.value.reshape(rows, cols);
  n.inputs.clear();
  return n;
}

Graph::Node& Graph::node(Var v) {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= used_) throw Error(ErrorCode::UnknownEntity, "invalid graph variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= used_) throw Error(ErrorCode::UnknownEntity, "invalid graph variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Matrix& Graph::value(Var v) const { return node(v).value; }
const Matrix& Graph::grad(Var v) const { return node(v).grad; }

void Graph::clear() { used_ = 0; }

Var Graph::constant(const Matrix& m) {
  Node& n = push(Op::Constant, m.rows, m.cols);
  std::copy(m.data.begin(), m.data.end(), n.value.data.begin());
  return {static_cast<int>(used_ - 1)};
}

Var Graph::constant(Matrix&& m) { return constant(static_cast<const Matrix&>(m)); }

Var Graph::param(ParamStore& store, int index) {
  const auto& e = store[index];
  Node& n = push(Op::Param, e.value.rows, e.value.cols);
  std::copy(e.value.data.begin(), e.value.data.end(), n.value.data.begin());
  n.store = &store;
  n.i0 = index;
  n.needs_grad = true;
  return {static_cast<int>(used_ - 1)};
}

Var Graph::param(ParamStore& store, std::string_view name) { return param(store, store.index(name)); }

Var Graph::dense(Var x, Var w, Var b) {
  const Matrix& X = node(x).value;
  const Matrix& W = node(w).value;
  if (X.cols != W.rows) shape_error("dense", X, W);
  if (b.valid()) {
    const Matrix& B = node(b).value;
    if (B.rows != 1 || B.cols != W.cols) shape_error("dense bias", W, B);
  }
  const int m = X.rows, in = X.cols, out = W.cols;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Dense, m, out);
  const Node& nx = nodes_[x.id];
  const Node& nw = nodes_[w.id];
  n.a = x.id;
  n.b = w.id;
  n.c = b.id;
  n.needs_grad = nx.needs_grad || nw.needs_grad || (b.valid() && nodes_[b.id].needs_grad);
  Matrix& Y = n.value;
  for (int i = 0; i < m; ++i) {
    double* yr = &Y.data[static_cast<std::size_t>(i) * out];
    if (b.valid()) {
      const auto& bd = nodes_[b.id].value.data;
      std::copy(bd.begin(), bd.end(), yr);
    } else {
      std::fill(yr, yr + out, 0.0);
    }
    for (int p = 0; p < in; ++p) {
      const double xv = nx.value.data[static_cast<std::size_t>(i) * in + p];
      if (xv == 0.0) continue;
      const double* wr = &nw.value.data[static_cast<std::size_t>(p) * out];
      for (int j = 0; j < out; ++j) yr[j] += xv * wr[j];
    }
  }
  return {id};
}

Var Graph::matmul(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.cols != B.rows) shape_error("matmul", A, B);
  const int m = A.rows, k = A.cols, n_ = B.cols;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::MatMul, m, n_);
  const Node& na = nodes_[a.id];
  const Node& nb = nodes_[b.id];
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value.fill(0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = na.value.data[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0) continue;
      const double* br = &nb.value.data[static_cast<std::size_t>(p) * n_];
      double* cr = &n.value.data[static_cast<std::size_t>(i) * n_];
      for (int j = 0; j < n_; ++j) cr[j] += av * br[j];
    }
  return {id};
}

Var Graph::matmul_nt(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.cols != B.cols) shape_error("matmul_nt", A, B);
  const int m = A.rows, k = A.cols, n_ = B.rows;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::MatMulNT, m, n_);
  const Node& na = nodes_[a.id];
  const Node& nb = nodes_[b.id];
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n_; ++j) {
      const double* ar = &na.value.data[static_cast<std::size_t>(i) * k];
      const double* br = &nb.value.data[static_cast<std::size_t>(j) * k];
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ar[p] * br[p];
      n.value.data[static_cast<std::size_t>(i) * n_ + j] = s;
    }
  return {id};
}

Var Graph::add(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.rows != B.rows || A.cols != B.cols) shape_error("add", A, B);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Add, A.rows, A.cols);
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] = nodes_[a.id].value.data[i] + nodes_[b.id].value.data[i];
  return {id};
}

Var Graph::add_row(Var x, Var row) {
  const Matrix& X = node(x).value;
  const Matrix& R = node(row).value;
  if (R.rows != 1 || R.cols != X.cols) shape_error("add_row", X, R);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::AddRow, X.rows, X.cols);
  n.a = x.id;
  n.b = row.id;
  n.needs_grad = nodes_[x.id].needs_grad || nodes_[row.id].needs_grad;
  const auto& xv = nodes_[x.id].value;
  const auto& rv = nodes_[row.id].value;
  for (int i = 0; i < xv.rows; ++i)
    for (int j = 0; j < xv.cols; ++j) n.value(i, j) = xv(i, j) + rv(0, j);
  return {id};
}

Var Graph::mul(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.rows != B.rows || A.cols != B.cols) shape_error("mul", A, B);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Mul, A.rows, A.cols);
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] = nodes_[a.id].value.data[i] * nodes_[b.id].value.data[i];
  return {id};
}

Var Graph::scale_rows(Var x, Var s) {
  const Matrix& X = node(x).value;
  const Matrix& S = node(s).value;
  if (S.cols != 1 || S.rows != X.rows) shape_error("scale_rows", X, S);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::ScaleRows, X.rows, X.cols);
  n.a = x.id;
  n.b = s.id;
  n.needs_grad = nodes_[x.id].needs_grad || nodes_[s.id].needs_grad;
  const auto& xv = nodes_[x.id].value;
  const auto& sv = nodes_[s.id].value;
  for (int i = 0; i < xv.rows; ++i)
    for (int j = 0; j < xv.cols; ++j) n.value(i, j) = xv(i, j) * sv(i, 0);
  return {id};
}

Var Graph::scale(Var x, double k) {
  const Matrix& X = node(x).value;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Scale, X.rows, X.cols);
  n.a = x.id;
  n.k = k;
  n.needs_grad = nodes_[x.id].needs_grad;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] = k * nodes_[x.id].value.data[i];
  return {id};
}

Var Graph::relu(Var x) {
  const Matrix& X = node(x).value;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Relu, X.rows, X.cols);
  n.a = x.id;
  n.needs_grad = nodes_[x.id].needs_grad;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] = std::max(0.0, nodes_[x.id].value.data[i]);
  return {id};
}

Var Graph::sigmoid(Var x) {
  const Matrix& X = node(x).value;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Sigmoid, X.rows, X.cols);
  n.a = x.id;
  n.needs_grad = nodes_[x.id].needs_grad;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    const double v = nodes_[x.id].value.data[i];
    n.value.data[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return {id};
}

Var Graph::softmax_rows(Var x) {
  const Matrix& X = node(x).value;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::SoftmaxRows, X.rows, X.cols);
  n.a = x.id;
  n.needs_grad = nodes_[x.id].needs_grad;
  const auto& xv = nodes_[x.id].value;
  for (int i = 0; i < xv.rows; ++i) {
    double mx = xv(i, 0);
    for (int j = 1; j < xv.cols; ++j) mx = std::max(mx, xv(i, j));
    double z = 0.0;
    for (int j = 0; j < xv.cols; ++j) {
      n.value(i, j) = std::exp(xv(i, j) - mx);
      z += n.value(i, j);
    }
    for (int j = 0; j < xv.cols; ++j) n.value(i, j) /= z;
  }
  return {id};
}

Var Graph::concat_cols(std::initializer_list<Var> parts) {
  if (parts.size() == 0) throw Error(ErrorCode::ShapeMismatch, "concat of nothing");
  const int rows = node(*parts.begin()).value.rows;
  int cols = 0;
  for (Var p : parts) {
    const Matrix& P = node(p).value;
    if (P.rows != rows) shape_error("concat_cols", node(*parts.begin()).value, P);
    cols += P.cols;
  }
  const int id = static_cast<int>(used_);
  Node& n = push(Op::ConcatCols, rows, cols);
  int offset = 0;
  for (Var p : parts) {
    const Node& np = nodes_[p.id];
    n.inputs.push_back(p.id);
    n.needs_grad = n.needs_grad || np.needs_grad;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < np.value.cols; ++j) n.value(i, offset + j) = np.value(i, j);
    offset += np.value.cols;
  }
  return {id};
}

Var Graph::mean_rows(Var x) {
  const Matrix& X = node(x).value;
  if (X.rows < 1) throw Error(ErrorCode::ShapeMismatch, "mean over zero rows");
  const int id = static_cast<int>(used_);
  Node& n = push(Op::MeanRows, 1, X.cols);
  n.a = x.id;
  n.needs_grad = nodes_[x.id].needs_grad;
  const auto& xv = nodes_[x.id].value;
  n.value.fill(0.0);
  for (int i = 0; i < xv.rows; ++i)
    for (int j = 0; j < xv.cols; ++j) n.value(0, j) += xv(i, j);
  for (double& v : n.value.data) v /= xv.rows;
  return {id};
}

Var Graph::row_sum(Var x) {
  const Matrix& X = node(x).value;
  const int id = static_cast<int>(used_);
  Node& n = push(Op::RowSum, X.rows, 1);
  n.a = x.id;
  n.needs_grad = nodes_[x.id].needs_grad;
  const auto& xv = nodes_[x.id].value;
  for (int i = 0; i < xv.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < xv.cols; ++j) s += xv(i, j);
    n.value(i, 0) = s;
  }
  return {id};
}

Var Graph::sum(Var x) {
  node(x);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Sum, 1, 1);
  n.a = x.id;
  n.needs_grad = nodes_[x.id].needs_grad;
  double s = 0.0;
  for (double v : nodes_[x.id].value.data) s += v;
  n.value.data[0] = s;
  return {id};
}

Var Graph::pick(Var x, int row, int col) {
  const Matrix& X = node(x).value;
  if (row < 0 || row >= X.rows || col < 0 || col >= X.cols)
    throw Error(ErrorCode::ShapeMismatch, "pick out of range");
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Pick, 1, 1);
  n.a = x.id;
  n.i0 = row;
  n.i1 = col;
  n.needs_grad = nodes_[x.id].needs_grad;
  n.value.data[0] = nodes_[x.id].value(row, col);
  return {id};
}

Var Graph::bce(Var pred, const Matrix& target) {
  const Matrix& P = node(pred).value;
  if (P.rows != target.rows || P.cols != target.cols || P.size() == 0) shape_error("bce", P, target);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Bce, 1, 1);
  n.a = pred.id;
  n.aux = target;
  n.needs_grad = nodes_[pred.id].needs_grad;
  double s = 0.0;
  const auto& pv = nodes_[pred.id].value.data;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double p = std::clamp(pv[i], kBceEps, 1.0 - kBceEps);
    const double t = target.data[i];
    s -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  n.value.data[0] = s / static_cast<double>(pv.size());
  return {id};
}

Var Graph::mse(Var pred, const Matrix& target) {
  const Matrix& P = node(pred).value;
  if (P.rows != target.rows || P.cols != target.cols || P.size() == 0) shape_error("mse", P, target);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Mse, 1, 1);
  n.a = pred.id;
  n.aux = target;
  n.needs_grad = nodes_[pred.id].needs_grad;
  double s = 0.0;
  const auto& pv = nodes_[pred.id].value.data;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double e = pv[i] - target.data[i];
    s += e * e;
  }
  n.value.data[0] = s / static_cast<double>(pv.size());
  return {id};
}

Var Graph::huber(Var pred, const Matrix& target, double delta) {
  const Matrix& P = node(pred).value;
  if (P.rows != target.rows || P.cols != target.cols || P.size() == 0) shape_error("huber", P, target);
  const int id = static_cast<int>(used_);
  Node& n = push(Op::Huber, 1, 1);
  n.a = pred.id;
  n.aux = target;
  n.k = delta;
  n.needs_grad = nodes_[pred.id].needs_grad;
  double s = 0.0;
  const auto& pv = nodes_[pred.id].value.data;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double e = pv[i] - target.data[i];
    const double a = std::abs(e);
    s += a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
  }
  n.value.data[0] = s / static_cast<double>(pv.size());
  return {id};
}

void Graph::backward(Var loss) {
  Node& l = node(loss);
  if (l.value.rows != 1 || l.value.cols != 1) throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar loss");
  for (std::size_t i = 0; i <= static_cast<std::size_t>(loss.id); ++i) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    n.grad.reshape(n.value.rows, n.value.cols);
    n.grad.fill(0.0);
  }
  if (!l.needs_grad) return;
  l.grad.data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad) backward_node(n);
  }
}

void Graph::backward_node(Node& n) {
  const Matrix& G = n.grad;
  auto wants = [&](int id) { return id >= 0 && nodes_[id].needs_grad; };
  switch (n.op) {
    case Op::Constant:
      break;
    case Op::Param: {
      auto& e = (*n.store)[n.i0];
      for (std::size_t k = 0; k < G.size(); ++k) e.grad.data[k] += G.data[k];
      e.grad_ready = true;
      break;
    }
    case Op::Dense: {
      Node& x = nodes_[n.a];
      Node& w = nodes_[n.b];
      const int m = x.value.rows, in = x.value.cols, out = w.value.cols;
      if (x.needs_grad)
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < in; ++p) {
            double s = 0.0;
            for (int j = 0; j < out; ++j) s += G(i, j) * w.value(p, j);
            x.grad(i, p) += s;
          }
      if (w.needs_grad)
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < in; ++p) {
            const double xv = x.value(i, p);
            if (xv == 0.0) continue;
            for (int j = 0; j < out; ++j) w.grad(p, j) += xv * G(i, j);
          }
      if (wants(n.c)) {
        Node& b = nodes_[n.c];
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < out; ++j) b.grad(0, j) += G(i, j);
      }
      break;
    }
    case Op::MatMul: {
      Node& a = nodes_[n.a];
      Node& b = nodes_[n.b];
      const int m = a.value.rows, k = a.value.cols, nc = b.value.cols;
      if (a.needs_grad)
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < nc; ++j) s += G(i, j) * b.value(p, j);
            a.grad(i, p) += s;
          }
      if (b.needs_grad)
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            const double av = a.value(i, p);
            if (av == 0.0) continue;
            for (int j = 0; j < nc; ++j) b.grad(p, j) += av * G(i, j);
          }
      break;
    }
    case Op::MatMulNT: {
      Node& a = nodes_[n.a];
      Node& b = nodes_[n.b];
      const int m = a.value.rows, k = a.value.cols, nr = b.value.rows;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < nr; ++j) {
          const double g = G(i, j);
          if (g == 0.0) continue;
          if (a.needs_grad)
            for (int p = 0; p < k; ++p) a.grad(i, p) += g * b.value(j, p);
          if (b.needs_grad)
            for (int p = 0; p < k; ++p) b.grad(j, p) += g * a.value(i, p);
        }
      break;
    }
    case Op::Add: {
      if (wants(n.a))
        for (std::size_t k = 0; k < G.size(); ++k) nodes_[n.a].grad.data[k] += G.data[k];
      if (wants(n.b))
        for (std::size_t k = 0; k < G.size(); ++k) nodes_[n.b].grad.data[k] += G.data[k];
      break;
    }
    case Op::AddRow: {
      if (wants(n.a))
        for (std::size_t k = 0; k < G.size(); ++k) nodes_[n.a].grad.data[k] += G.data[k];
      if (wants(n.b)) {
        Node& r = nodes_[n.b];
        for (int i = 0; i < G.rows; ++i)
          for (int j = 0; j < G.cols; ++j) r.grad(0, j) += G(i, j);
      }
      break;
    }
    case Op::Mul: {
      Node& a = nodes_[n.a];
      Node& b = nodes_[n.b];
      for (std::size_t k = 0; k < G.size(); ++k) {
        if (a.needs_grad) a.grad.data[k] += G.data[k] * b.value.data[k];
        if (b.needs_grad) b.grad.data[k] += G.data[k] * a.value.data[k];
      }
      break;
    }
    case Op::ScaleRows: {
      Node& x = nodes_[n.a];
      Node& s = nodes_[n.b];
      for (int i = 0; i < G.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < G.cols; ++j) {
          if (x.needs_grad) x.grad(i, j) += G(i, j) * s.value(i, 0);
          acc += G(i, j) * x.value(i, j);
        }
        if (s.needs_grad) s.grad(i, 0) += acc;
      }
      break;
    }
    case Op::Scale: {
      Node& x = nodes_[n.a];
      for (std::size_t k = 0; k < G.size(); ++k) x.grad.data[k] += n.k * G.data[k];
      break;
    }
    case Op::Relu: {
      Node& x = nodes_[n.a];
      for (std::size_t k = 0; k < G.size(); ++k)
        if (x.value.data[k] > 0.0) x.grad.data[k] += G.data[k];
      break;
    }
    case Op::Sigmoid: {
      Node& x = nodes_[n.a];
      for (std::size_t k = 0; k < G.size(); ++k) {
        const double y = n.value.data[k];
        x.grad.data[k] += G.data[k] * y * (1.0 - y);
      }
      break;
    }
    case Op::SoftmaxRows: {
      Node& x = nodes_[n.a];
      for (int i = 0; i < G.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < G.cols; ++j) dot += G(i, j) * n.value(i, j);
        for (int j = 0; j < G.cols; ++j) x.grad(i, j) += n.value(i, j) * (G(i, j) - dot);
      }
      break;
    }
    case Op::ConcatCols: {
      int offset = 0;
      for (int id : n.inputs) {
        Node& p = nodes_[id];
        if (p.needs_grad)
          for (int i = 0; i < G.rows; ++i)
            for (int j = 0; j < p.value.cols; ++j) p.grad(i, j) += G(i, offset + j);
        offset += p.value.cols;
      }
      break;
    }
    case Op::MeanRows: {
      Node& x = nodes_[n.a];
      const double inv = 1.0 / x.value.rows;
      for (int i = 0; i < x.value.rows; ++i)
        for (int j = 0; j < x.value.cols; ++j) x.grad(i, j) += G(0, j) * inv;
      break;
    }
    case Op::RowSum: {
      Node& x = nodes_[n.a];
      for (int i = 0; i < x.value.rows; ++i)
        for (int j = 0; j < x.value.cols; ++j) x.grad(i, j) += G(i, 0);
      break;
    }
    case Op::Sum: {
      Node& x = nodes_[n.a];
      for (double& g : x.grad.data) g += G.data[0];
      break;
    }
    case Op::Pick: {
      nodes_[n.a].grad(n.i0, n.i1) += G.data[0];
      break;
    }
    case Op::Bce: {
      Node& x = nodes_[n.a];
      const double scale = G.data[0] / static_cast<double>(x.value.size());
      for (std::size_t k = 0; k < x.value.size(); ++k) {
        const double p = x.value.data[k];
        if (p <= kBceEps || p >= 1.0 - kBceEps) continue;  // clamped
        const double t = n.aux.data[k];
        x.grad.data[k] += scale * (-t / p + (1.0 - t) / (1.0 - p));
      }
      break;
    }
    case Op::Mse: {
      Node& x = nodes_[n.a];
      const double scale = G.data[0] / static_cast<double>(x.value.size());
      for (std::size_t k = 0; k < x.value.size(); ++k)
        x.grad.data[k] += scale * 2.0 * (x.value.data[k] - n.aux.data[k]);
      break;
    }
    case Op::Huber: {
      Node& x = nodes_[n.a];
      const double scale = G.data[0] / static_cast<double>(x.value.size());
      for (std::size_t k = 0; k < x.value.size(); ++k) {
        const double e = x.value.data[k] - n.aux.data[k];
        x.grad.data[k] += scale * std::clamp(e, -n.k, n.k);
      }
      break;
    }
  }
}

Var self_attention_1head(Graph& g, Var h, Var wq, Var wk, Var wv, Var wo, Var bo) {
  const Var q = g.matmul(h, wq);
  const Var k = g.matmul(h, wk);
  const Var v = g.matmul(h, wv);
  const double d = static_cast<double>(g.value(wk).cols);
  const Var scores = g.scale(g.matmul_nt(q, k), 1.0 / std::sqrt(d));
  const Var attn = g.softmax_rows(scores);
  return g.dense(g.matmul(attn, v), wo, bo);
}

}  // namespace tsc::nn
