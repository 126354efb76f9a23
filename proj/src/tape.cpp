// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#include "neuvec/tape.hpp"

#include <cmath>

#include "neuvec/errors.hpp"

namespace neuvec {

namespace {

// C += A * B, row-major. The k-major loop keeps the B row hot and lets the
// compiler vectorize the column sweep.
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t m = a.rows, k = a.cols, n = b.cols;
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// dA += dC * B^T
void matmul_acc_nt(const Matrix& dc, const Matrix& b, Matrix& da) {
  const std::size_t m = dc.rows, n = dc.cols, k = b.rows;
  for (std::size_t i = 0; i < m; ++i) {
    const double* dci = dc.row_ptr(i);
    double* dai = da.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b.row_ptr(p);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += dci[j] * bp[j];
      dai[p] += s;
    }
  }
}

// dB += A^T * dC
void matmul_acc_tn(const Matrix& a, const Matrix& dc, Matrix& db) {
  const std::size_t m = a.rows, k = a.cols, n = dc.cols;
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.row_ptr(i);
    const double* dci = dc.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      double* dbp = db.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) dbp[j] += aip * dci[j];
    }
  }
}

double softplus_scalar(double x) {
  // Overflow-safe: for large x, log(1+e^x) == x to double precision.
  if (x > 36.0) return x;
  if (x < -36.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

Tape::NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::input(Matrix value) {
  Node n;
  n.op = Op::Input;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::NodeId Tape::param(Matrix value) {
  Node n;
  n.op = Op::Param;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Tape::NodeId Tape::unary(Op op, NodeId a, double c, int k) {
  Node n;
  n.op = op;
  n.a = a;
  n.c = c;
  n.k = k;
  n.requires_grad = nodes_[a].requires_grad;
  const Matrix& va = nodes_[a].value;
  switch (op) {
    case Op::Scale: {
      n.value = va;
      for (double& v : n.value.data) v *= c;
      break;
    }
    case Op::AddScalar: {
      n.value = va;
      for (double& v : n.value.data) v += c;
      break;
    }
    case Op::Tanh: {
      n.value = va;
      for (double& v : n.value.data) v = std::tanh(v);
      break;
    }
    case Op::Exp: {
      n.value = va;
      for (double& v : n.value.data) v = std::exp(v);
      break;
    }
    case Op::Log: {
      n.value = va;
      for (double& v : n.value.data) v = std::log(v);
      break;
    }
    case Op::Softplus: {
      n.value = va;
      for (double& v : n.value.data) v = softplus_scalar(v);
      break;
    }
    case Op::SumAll: {
      double s = 0.0;
      for (double v : va.data) s += v;
      n.value = Matrix(1, 1);
      n.value(0, 0) = s;
      break;
    }
    case Op::GroupSum: {
      if (k <= 0 || va.rows % k != 0) throw ShapeMismatch("group_sum rows not divisible by group size");
      const std::size_t groups = va.rows / k;
      n.value = Matrix(groups, va.cols);
      for (std::size_t g = 0; g < groups; ++g) {
        double* out = n.value.row_ptr(g);
        for (int r = 0; r < k; ++r) {
          const double* in = va.row_ptr(g * k + r);
          for (std::size_t j = 0; j < va.cols; ++j) out[j] += in[j];
        }
      }
      break;
    }
    case Op::RepeatRows: {
      if (k <= 0) throw ShapeMismatch("repeat_rows needs positive count");
      n.value = Matrix(va.rows * k, va.cols);
      for (std::size_t g = 0; g < va.rows; ++g)
        for (int r = 0; r < k; ++r)
          std::copy_n(va.row_ptr(g), va.cols, n.value.row_ptr(g * k + r));
      break;
    }
    default:
      throw ShapeMismatch("unary op misuse");
  }
  return push(std::move(n));
}

Tape::NodeId Tape::binary(Op op, NodeId a, NodeId b) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  const Matrix& va = nodes_[a].value;
  const Matrix& vb = nodes_[b].value;
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      if (va.rows != vb.rows || va.cols != vb.cols) throw ShapeMismatch("elementwise op shapes differ");
      n.value = va;
      const double* q = vb.data.data();
      double* p = n.value.data.data();
      const std::size_t sz = n.value.data.size();
      if (op == Op::Add)
        for (std::size_t i = 0; i < sz; ++i) p[i] += q[i];
      else if (op == Op::Sub)
        for (std::size_t i = 0; i < sz; ++i) p[i] -= q[i];
      else if (op == Op::Mul)
        for (std::size_t i = 0; i < sz; ++i) p[i] *= q[i];
      else
        for (std::size_t i = 0; i < sz; ++i) p[i] /= q[i];
      break;
    }
    case Op::MatMul: {
      if (va.cols != vb.rows) throw ShapeMismatch("matmul inner dimensions");
      n.value = Matrix(va.rows, vb.cols);
      matmul_acc(va, vb, n.value);
      break;
    }
    case Op::AddRowVec: {
      if (vb.rows != 1 || vb.cols != va.cols) throw ShapeMismatch("add_rowvec needs 1 x cols row");
      n.value = va;
      for (std::size_t i = 0; i < va.rows; ++i) {
        double* p = n.value.row_ptr(i);
        for (std::size_t j = 0; j < va.cols; ++j) p[j] += vb(0, j);
      }
      break;
    }
    case Op::ConcatCols: {
      if (va.rows != vb.rows) throw ShapeMismatch("concat_cols row counts differ");
      n.value = Matrix(va.rows, va.cols + vb.cols);
      for (std::size_t i = 0; i < va.rows; ++i) {
        std::copy_n(va.row_ptr(i), va.cols, n.value.row_ptr(i));
        std::copy_n(vb.row_ptr(i), vb.cols, n.value.row_ptr(i) + va.cols);
      }
      break;
    }
    default:
      throw ShapeMismatch("binary op misuse");
  }
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
Tape::NodeId Tape::sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
Tape::NodeId Tape::mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
Tape::NodeId Tape::div(NodeId a, NodeId b) { return binary(Op::Div, a, b); }
Tape::NodeId Tape::scale(NodeId a, double c) { return unary(Op::Scale, a, c); }
Tape::NodeId Tape::add_scalar(NodeId a, double c) { return unary(Op::AddScalar, a, c); }
Tape::NodeId Tape::matmul(NodeId a, NodeId b) { return binary(Op::MatMul, a, b); }
Tape::NodeId Tape::add_rowvec(NodeId a, NodeId row) { return binary(Op::AddRowVec, a, row); }
Tape::NodeId Tape::tanh(NodeId a) { return unary(Op::Tanh, a); }
Tape::NodeId Tape::exp(NodeId a) { return unary(Op::Exp, a); }
Tape::NodeId Tape::log(NodeId a) { return unary(Op::Log, a); }
Tape::NodeId Tape::softplus(NodeId a) { return unary(Op::Softplus, a); }
Tape::NodeId Tape::sum_all(NodeId a) { return unary(Op::SumAll, a); }
Tape::NodeId Tape::group_sum(NodeId a, int group_rows) { return unary(Op::GroupSum, a, 0.0, group_rows); }
Tape::NodeId Tape::repeat_rows(NodeId a, int times) { return unary(Op::RepeatRows, a, 0.0, times); }
Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) { return binary(Op::ConcatCols, a, b); }

Tape::NodeId Tape::dropout(NodeId a, double rate, RngState& rng, bool train_mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ShapeMismatch("dropout rate must be in [0, 1)");
  if (!train_mode || rate == 0.0) return a;
  Node n;
  n.op = Op::Dropout;
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  const Matrix& va = nodes_[a].value;
  n.mask.resize(va.data.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : n.mask) m = (rng.uniform() < rate) ? 0.0 : keep_scale;
  n.value = va;
  for (std::size_t i = 0; i < n.mask.size(); ++i) n.value.data[i] *= n.mask[i];
  return push(std::move(n));
}

void Tape::backward(NodeId root) {
  if (nodes_[root].value.rows != 1 || nodes_[root].value.cols != 1)
    throw ShapeMismatch("backward root must be 1x1");
  for (auto& n : nodes_) {
    if (n.requires_grad) {
      n.grad = Matrix(n.value.rows, n.value.cols);
    }
  }
  if (!nodes_[root].requires_grad) return;  // nothing differentiable below
  nodes_[root].grad(0, 0) = 1.0;

  auto needs = [&](NodeId id) { return id >= 0 && nodes_[id].requires_grad; };

  for (NodeId id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::Input:
      case Op::Param:
        break;
      case Op::Add: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.a].grad.data[i] += g.data[i];
        if (needs(n.b))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.b].grad.data[i] += g.data[i];
        break;
      }
      case Op::Sub: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.a].grad.data[i] += g.data[i];
        if (needs(n.b))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.b].grad.data[i] -= g.data[i];
        break;
      }
      case Op::Mul: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i)
            nodes_[n.a].grad.data[i] += g.data[i] * nodes_[n.b].value.data[i];
        if (needs(n.b))
          for (std::size_t i = 0; i < g.data.size(); ++i)
            nodes_[n.b].grad.data[i] += g.data[i] * nodes_[n.a].value.data[i];
        break;
      }
      case Op::Div: {
        const auto& vb = nodes_[n.b].value.data;
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.a].grad.data[i] += g.data[i] / vb[i];
        if (needs(n.b)) {
          const auto& out = n.value.data;  // a/b
          for (std::size_t i = 0; i < g.data.size(); ++i)
            nodes_[n.b].grad.data[i] -= g.data[i] * out[i] / vb[i];
        }
        break;
      }
      case Op::Scale: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.a].grad.data[i] += n.c * g.data[i];
        break;
      }
      case Op::AddScalar: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.a].grad.data[i] += g.data[i];
        break;
      }
      case Op::MatMul: {
        if (needs(n.a)) matmul_acc_nt(g, nodes_[n.b].value, nodes_[n.a].grad);
        if (needs(n.b)) matmul_acc_tn(nodes_[n.a].value, g, nodes_[n.b].grad);
        break;
      }
      case Op::AddRowVec: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) nodes_[n.a].grad.data[i] += g.data[i];
        if (needs(n.b)) {
          Matrix& gb = nodes_[n.b].grad;
          for (std::size_t i = 0; i < g.rows; ++i) {
            const double* gi = g.row_ptr(i);
            for (std::size_t j = 0; j < g.cols; ++j) gb(0, j) += gi[j];
          }
        }
        break;
      }
      case Op::Tanh: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double t = n.value.data[i];
            nodes_[n.a].grad.data[i] += g.data[i] * (1.0 - t * t);
          }
        break;
      }
      case Op::Exp: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i)
            nodes_[n.a].grad.data[i] += g.data[i] * n.value.data[i];
        break;
      }
      case Op::Log: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i)
            nodes_[n.a].grad.data[i] += g.data[i] / nodes_[n.a].value.data[i];
        break;
      }
      case Op::Softplus: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double x = nodes_[n.a].value.data[i];
            nodes_[n.a].grad.data[i] += g.data[i] / (1.0 + std::exp(-x));
          }
        break;
      }
      case Op::SumAll: {
        if (needs(n.a)) {
          const double s = g(0, 0);
          for (double& v : nodes_[n.a].grad.data) v += s;
        }
        break;
      }
      case Op::GroupSum: {
        if (needs(n.a)) {
          Matrix& ga = nodes_[n.a].grad;
          for (std::size_t gi = 0; gi < g.rows; ++gi)
            for (int r = 0; r < n.k; ++r) {
              double* dst = ga.row_ptr(gi * n.k + r);
              const double* src = g.row_ptr(gi);
              for (std::size_t j = 0; j < g.cols; ++j) dst[j] += src[j];
            }
        }
        break;
      }
      case Op::RepeatRows: {
        if (needs(n.a)) {
          Matrix& ga = nodes_[n.a].grad;
          for (std::size_t gi = 0; gi < ga.rows; ++gi) {
            double* dst = ga.row_ptr(gi);
            for (int r = 0; r < n.k; ++r) {
              const double* src = g.row_ptr(gi * n.k + r);
              for (std::size_t j = 0; j < ga.cols; ++j) dst[j] += src[j];
            }
          }
        }
        break;
      }
      case Op::ConcatCols: {
        const std::size_t ca = nodes_[n.a].value.cols;
        if (needs(n.a)) {
          Matrix& ga = nodes_[n.a].grad;
          for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < ca; ++j) ga(i, j) += g(i, j);
        }
        if (needs(n.b)) {
          Matrix& gb = nodes_[n.b].grad;
          for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < gb.cols; ++j) gb(i, j) += g(i, ca + j);
        }
        break;
      }
      case Op::Dropout: {
        if (needs(n.a))
          for (std::size_t i = 0; i < g.data.size(); ++i)
            nodes_[n.a].grad.data[i] += g.data[i] * n.mask[i];
        break;
      }
    }
  }
}

void dropout_apply(std::span<double> values, double rate, RngState& rng, bool train_mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ShapeMismatch("dropout rate must be in [0, 1)");
  if (!train_mode || rate == 0.0) return;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : values) v = (rng.uniform() < rate) ? 0.0 : v * keep_scale;
}

}  // namespace neuvec
