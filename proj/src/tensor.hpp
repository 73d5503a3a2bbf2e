// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "params.hpp"

namespace tsc::nn {

// Handle to a node of a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over small dense matrices. Nodes are appended in
// topological order; backward() walks them in reverse. Parameter leaves
// accumulate their gradient into the owning ParamStore.
//
// clear() keeps node storage so a graph can be rebuilt every step without
// reallocating.
class Graph {
 public:
  Var constant(const Matrix& m);
  Var constant(Matrix&& m);
  Var param(ParamStore& store, int index);
  Var param(ParamStore& store, std::string_view name);

  // x (m x in) * W (in x out) + b (1 x out); b may be an invalid Var
  Var dense(Var x, Var w, Var b = {});
  Var matmul(Var a, Var b);
  // a * b^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // adds a 1 x c row to every row of x
  Var add_row(Var x, Var row);
  Var mul(Var a, Var b);
  // multiplies row i of x by s(i, 0)
  Var scale_rows(Var x, Var s);
  Var scale(Var x, double k);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var softmax_rows(Var x);
  Var concat_cols(std::initializer_list<Var> parts);
  Var mean_rows(Var x);  // 1 x c
  Var row_sum(Var x);    // m x 1
  Var sum(Var x);        // 1 x 1
  Var pick(Var x, int row, int col);

  // Mean-reduced losses against constant targets.
  Var bce(Var pred, const Matrix& target);  // pred clamped to [1e-7, 1 - 1e-7]
  Var mse(Var pred, const Matrix& target);
  Var huber(Var pred, const Matrix& target, double delta = 1.0);

  void backward(Var loss);

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;
  void clear();
  std::size_t size() const { return used_; }

 private:
  enum class Op : std::uint8_t {
    Constant, Param, Dense, MatMul, MatMulNT, Add, AddRow, Mul, ScaleRows, Scale, Relu, Sigmoid,
    SoftmaxRows, ConcatCols, MeanRows, RowSum, Sum, Pick, Bce, Mse, Huber,
  };
  struct Node {
    Op op = Op::Constant;
    int a = -1, b = -1, c = -1;
    int i0 = 0, i1 = 0;
    double k = 0.0;
    bool needs_grad = false;
    ParamStore* store = nullptr;
    Matrix value;
    Matrix grad;
    Matrix aux;  // loss targets
    std::vector<int> inputs;
  };

  Node& push(Op op, int rows, int cols);
  Node& node(Var v);
  const Node& node(Var v) const;
  void backward_node(Node& n);

  std::vector<Node> nodes_;
  std::size_t used_ = 0;
};

// Single-head scaled dot-product self-attention over the rows of h (m x d),
// projected to one pre-activation score per row: softmax(QK^T/sqrt(d)) V wo + bo.
Var self_attention_1head(Graph& g, Var h, Var wq, Var wk, Var wv, Var wo, Var bo);

}  // namespace tsc::nn
