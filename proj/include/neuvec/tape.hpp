// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_TAPE_HPP
#define NEUVEC_TAPE_HPP

#include <vector>

#include "neuvec/linalg.hpp"
#include "neuvec/rng.hpp"

namespace neuvec {

/// Reverse-mode automatic differentiation over matrix-valued nodes.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order of the DAG; backward() walks it once in reverse.
/// Adjoints are accumulated only along paths that reach a differentiable
/// leaf (param), so constant data rides through for free.
class Tape {
 public:
  using NodeId = int;

  /// Constant leaf; no adjoint is tracked.
  NodeId input(Matrix value);
  /// Differentiable leaf.
  NodeId param(Matrix value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId div(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double c);
  NodeId add_scalar(NodeId a, double c);
  NodeId matmul(NodeId a, NodeId b);
  /// Adds a 1 x c row vector to every row of a (bias broadcast).
  NodeId add_rowvec(NodeId a, NodeId row);
  NodeId tanh(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId softplus(NodeId a);
  NodeId sum_all(NodeId a);  // -> 1x1
  /// Sums consecutive blocks of `group_rows` rows: (G*s x c) -> (G x c).
  NodeId group_sum(NodeId a, int group_rows);
  /// Repeats each row `times` times: (G x c) -> (G*times x c).
  NodeId repeat_rows(NodeId a, int times);
  NodeId concat_cols(NodeId a, NodeId b);
  /// Inverted dropout: in train mode each entry is zeroed with probability
  /// `rate` and survivors are scaled by 1/(1-rate); otherwise the identity.
  NodeId dropout(NodeId a, double rate, RngState& rng, bool train_mode);

  void backward(NodeId root);

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  const Matrix& grad(NodeId id) const { return nodes_[id].grad; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Input, Param, Add, Sub, Mul, Div, Scale, AddScalar, MatMul, AddRowVec,
    Tanh, Exp, Log, Softplus, SumAll, GroupSum, RepeatRows, ConcatCols, Dropout,
  };

  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    double c = 0.0;
    int k = 0;
    bool requires_grad = false;
    Matrix value;
    Matrix grad;
    std::vector<double> mask;  // dropout keep/scale factors
  };

  NodeId push(Node n);
  NodeId unary(Op op, NodeId a, double c = 0.0, int k = 0);
  NodeId binary(Op op, NodeId a, NodeId b);

  std::vector<Node> nodes_;
};

/// Standalone inverted-dropout on a flat buffer (the tape node uses the same
/// rule). Identity when train_mode is false or rate is 0.
void dropout_apply(std::span<double> values, double rate, RngState& rng, bool train_mode);

}  // namespace neuvec

#endif
