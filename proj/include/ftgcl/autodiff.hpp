#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ftgcl/error.hpp"

// Define-by-run reverse-mode differentiation over dense matrices. Each
// primitive evaluates its value eagerly and records an adjoint rule on the
// tape; Tape::backward sweeps the records in reverse.

namespace ftgcl::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class Op {
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Mul,
  AddRowBroadcast,
  AddColBroadcast,
  MulColBroadcast,
  Scale,
  Exp,
  Log,
  Relu,
  Elu,
  Prelu,
  LeakyRelu,
  Clamp,
  SegmentSoftmax,
  RowNormalize,
  ColNormalize,
  Sum,
  Mean,
  RowSum,
  ColSum,
  GatherRows,
  ScatterAddRows,
  SliceRows,
  SliceCols,
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

  friend bool operator==(const Var& a, const Var& b) { return a.tape_ == b.tape_ && a.id_ == b.id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Adjoints of the parameter leaves, keyed by node id.
class Gradients {
 public:
  const Matrix& operator[](const Var& v) const {
    auto it = grads_.find(v.id());
    if (it == grads_.end()) throw InvalidArgument("no gradient recorded for node " + std::to_string(v.id()));
    return it->second;
  }
  bool contains(const Var& v) const { return grads_.count(v.id()) != 0; }
  std::size_t size() const { return grads_.size(); }
  const std::map<std::size_t, Matrix>& all() const { return grads_; }

 private:
  friend class Tape;
  std::map<std::size_t, Matrix> grads_;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A trainable leaf; backward() reports its adjoint.
  Var parameter(Matrix value) { return push(Op::Leaf, {}, std::move(value), nullptr, true); }

  // A leaf that never receives gradient.
  Var constant(Matrix value) { return push(Op::Leaf, {}, std::move(value), nullptr, false); }

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_parameters() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) {
      return n.op == Op::Leaf && n.is_param;
    }));
  }
  Op op(std::size_t id) const { return nodes_.at(id).op; }
  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const Matrix& adjoint(std::size_t id) const { return nodes_.at(id).adjoint; }
  Matrix& adjoint_mut(std::size_t id) { return nodes_[id].adjoint; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }

  Var push(Op op, std::vector<std::size_t> inputs, Matrix value, Backprop backprop, bool is_param = false) {
    Node n;
    n.op = op;
    n.needs_grad = is_param;
    for (auto i : inputs) n.needs_grad = n.needs_grad || nodes_[i].needs_grad;
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    n.backprop = std::move(backprop);
    n.is_param = is_param;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  // Reverse sweep from a 1x1 output. Adjoints are reset first, so repeated
  // calls give identical results.
  Gradients backward(const Var& output) {
    if (&output.tape() != this) throw InvalidArgument("backward: output belongs to another tape");
    const auto out = output.id();
    if (value(out).rows() != 1 || value(out).cols() != 1) {
      throw InvalidArgument("backward: output must be scalar, got " + std::to_string(value(out).rows()) + "x" +
                            std::to_string(value(out).cols()));
    }
    for (std::size_t i = 0; i <= out; ++i) {
      auto& n = nodes_[i];
      if (n.needs_grad) n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
      else n.adjoint.resize(0, 0);
    }
    nodes_[out].adjoint(0, 0) = 1.0;
    for (std::size_t i = out + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.needs_grad) continue;
      if (!n.value.allFinite()) {
        throw NumericalError("non-finite value at node " + std::to_string(i));
      }
      if (!n.adjoint.allFinite()) {
        throw NumericalError("non-finite adjoint at node " + std::to_string(i));
      }
      if (n.backprop) n.backprop(*this, i);
    }
    Gradients g;
    for (std::size_t i = 0; i <= out; ++i) {
      if (nodes_[i].is_param) g.grads_.emplace(i, nodes_[i].adjoint);
    }
    return g;
  }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::vector<std::size_t> inputs;
    Matrix value;
    Matrix adjoint;
    Backprop backprop;
    bool is_param = false;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

namespace detail {

inline void same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw InvalidArgument("operands live on different tapes");
}

inline void same_shape(const Var& a, const Var& b, const char* what) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

// Accumulate into an input's adjoint if it participates in differentiation.
template <typename Expr>
void accumulate(Tape& t, std::size_t input, const Expr& delta) {
  if (t.needs_grad(input)) t.adjoint_mut(input) += delta;
}

// Shared shape of elementwise unary ops: y = f(x), dx = dy * f'(x, y).
template <typename Fwd, typename Deriv>
Var unary(Op op, const Var& x, Fwd fwd, Deriv deriv) {
  Tape& t = x.tape();
  Matrix y = x.value().unaryExpr(fwd);
  const auto xi = x.id();
  return t.push(op, {xi}, std::move(y), [xi, deriv](Tape& tp, std::size_t self) {
    const Matrix& xv = tp.value(xi);
    const Matrix& yv = tp.value(self);
    Matrix d = xv.binaryExpr(yv, deriv);
    accumulate(tp, xi, tp.adjoint(self).cwiseProduct(d));
  });
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  const auto ai = a.id(), bi = b.id();
  return a.tape().push(Op::MatMul, {ai, bi}, a.value() * b.value(), [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ai)) t.adjoint_mut(ai).noalias() += g * t.value(bi).transpose();
    if (t.needs_grad(bi)) t.adjoint_mut(bi).noalias() += t.value(ai).transpose() * g;
  });
}

inline Var transpose(const Var& a) {
  const auto ai = a.id();
  return a.tape().push(Op::Transpose, {ai}, a.value().transpose(), [ai](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self).transpose());
  });
}

inline Var add(const Var& a, const Var& b) {
  detail::same_shape(a, b, "add");
  const auto ai = a.id(), bi = b.id();
  return a.tape().push(Op::Add, {ai, bi}, a.value() + b.value(), [ai, bi](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self));
    detail::accumulate(t, bi, t.adjoint(self));
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::same_shape(a, b, "sub");
  const auto ai = a.id(), bi = b.id();
  return a.tape().push(Op::Sub, {ai, bi}, a.value() - b.value(), [ai, bi](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self));
    detail::accumulate(t, bi, -t.adjoint(self));
  });
}

// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  detail::same_shape(a, b, "mul");
  const auto ai = a.id(), bi = b.id();
  return a.tape().push(Op::Mul, {ai, bi}, a.value().cwiseProduct(b.value()), [ai, bi](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self).cwiseProduct(t.value(bi)));
    detail::accumulate(t, bi, t.adjoint(self).cwiseProduct(t.value(ai)));
  });
}

// a (N x D) + row (1 x D) added to every row.
inline Var add_row_broadcast(const Var& a, const Var& row) {
  detail::same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw InvalidArgument("add_row_broadcast: expected 1 x cols row");
  const auto ai = a.id(), ri = row.id();
  Matrix y = a.value().rowwise() + row.value().row(0);
  return a.tape().push(Op::AddRowBroadcast, {ai, ri}, std::move(y), [ai, ri](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self));
    detail::accumulate(t, ri, t.adjoint(self).colwise().sum());
  });
}

// a (N x D) + col (N x 1) added to every column.
inline Var add_col_broadcast(const Var& a, const Var& col) {
  detail::same_tape(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) throw InvalidArgument("add_col_broadcast: expected rows x 1 column");
  const auto ai = a.id(), ci = col.id();
  Matrix y = a.value().colwise() + col.value().col(0);
  return a.tape().push(Op::AddColBroadcast, {ai, ci}, std::move(y), [ai, ci](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self));
    detail::accumulate(t, ci, t.adjoint(self).rowwise().sum());
  });
}

// Scales row r of a (N x D) by col(r) (N x 1).
inline Var mul_col_broadcast(const Var& a, const Var& col) {
  detail::same_tape(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) throw InvalidArgument("mul_col_broadcast: expected rows x 1 column");
  const auto ai = a.id(), ci = col.id();
  Matrix y = col.value().col(0).asDiagonal() * a.value();
  return a.tape().push(Op::MulColBroadcast, {ai, ci}, std::move(y), [ai, ci](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    detail::accumulate(t, ai, t.value(ci).col(0).asDiagonal() * g);
    detail::accumulate(t, ci, g.cwiseProduct(t.value(ai)).rowwise().sum());
  });
}

inline Var scale(const Var& a, double s) {
  const auto ai = a.id();
  return a.tape().push(Op::Scale, {ai}, a.value() * s, [ai, s](Tape& t, std::size_t self) {
    detail::accumulate(t, ai, t.adjoint(self) * s);
  });
}

inline Var exp(const Var& a) {
  return detail::unary(Op::Exp, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var log(const Var& a) {
  return detail::unary(Op::Log, a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

// Derivative at exactly 0 is taken as 0 for the piecewise-linear family.
inline Var relu(const Var& a) {
  return detail::unary(
      Op::Relu, a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var leaky_relu(const Var& a, double slope = 0.2) {
  return detail::unary(
      Op::LeakyRelu, a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? slope : 0.0); });
}

// ELU with alpha = 1.
inline Var elu(const Var& a) {
  return detail::unary(
      Op::Elu, a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

// PReLU with a learnable 1x1 slope shared by all entries.
inline Var prelu(const Var& a, const Var& slope) {
  detail::same_tape(a, slope);
  if (slope.rows() != 1 || slope.cols() != 1) throw InvalidArgument("prelu: slope must be 1x1");
  const auto ai = a.id(), si = slope.id();
  const double s = slope.value()(0, 0);
  Matrix y = a.value().unaryExpr([s](double x) { return x > 0.0 ? x : s * x; });
  return a.tape().push(Op::Prelu, {ai, si}, std::move(y), [ai, si](Tape& t, std::size_t self) {
    const double sv = t.value(si)(0, 0);
    const Matrix& x = t.value(ai);
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(ai)) {
      t.adjoint_mut(ai) += g.cwiseProduct(x.unaryExpr([sv](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? sv : 0.0); }));
    }
    if (t.needs_grad(si)) {
      t.adjoint_mut(si)(0, 0) += g.cwiseProduct(x.unaryExpr([](double v) { return v < 0.0 ? v : 0.0; })).sum();
    }
  });
}

// Clips into [lo, hi]; gradient passes only strictly inside the interval.
inline Var clamp(const Var& a, double lo, double hi) {
  return detail::unary(
      Op::Clamp, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// Softmax of an E x 1 score column within each segment
// [offsets[s], offsets[s+1]). Empty segments are allowed.
inline Var segment_softmax(const Var& scores, std::vector<Index> offsets) {
  if (scores.cols() != 1) throw InvalidArgument("segment_softmax: scores must be a column");
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != scores.rows() ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw InvalidArgument("segment_softmax: offsets must be non-decreasing from 0 to the score count");
  }
  const Matrix& x = scores.value();
  Matrix y(x.rows(), 1);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const Index b = offsets[s], e = offsets[s + 1];
    if (b == e) continue;
    const double mx = x.col(0).segment(b, e - b).maxCoeff();
    double z = 0.0;
    for (Index k = b; k < e; ++k) z += (y(k, 0) = std::exp(x(k, 0) - mx));
    for (Index k = b; k < e; ++k) y(k, 0) /= z;
  }
  const auto xi = scores.id();
  return scores.tape().push(Op::SegmentSoftmax, {xi}, std::move(y),
                            [xi, offsets = std::move(offsets)](Tape& t, std::size_t self) {
                              if (!t.needs_grad(xi)) return;
                              const Matrix& yv = t.value(self);
                              const Matrix& g = t.adjoint(self);
                              Matrix& dx = t.adjoint_mut(xi);
                              for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
                                const Index b = offsets[s], e = offsets[s + 1];
                                double dot = 0.0;
                                for (Index k = b; k < e; ++k) dot += yv(k, 0) * g(k, 0);
                                for (Index k = b; k < e; ++k) dx(k, 0) += yv(k, 0) * (g(k, 0) - dot);
                              }
                            });
}

// Divides every row by its L2 norm. A zero row is an error.
inline Var row_normalize(const Var& a) {
  Eigen::VectorXd norms = a.value().rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) {
    if (norms(i) == 0.0) throw InvalidArgument("row_normalize: row " + std::to_string(i) + " has zero norm");
  }
  Matrix y = norms.cwiseInverse().asDiagonal() * a.value();
  const auto ai = a.id();
  return a.tape().push(Op::RowNormalize, {ai}, std::move(y), [ai, norms](Tape& t, std::size_t self) {
    if (!t.needs_grad(ai)) return;
    const Matrix& yv = t.value(self);
    const Matrix& g = t.adjoint(self);
    Eigen::VectorXd proj = yv.cwiseProduct(g).rowwise().sum();
    Matrix d = g - proj.asDiagonal() * yv;
    t.adjoint_mut(ai) += norms.cwiseInverse().asDiagonal() * d;
  });
}

// Divides every column by its L2 norm. A zero column is an error.
inline Var col_normalize(const Var& a) {
  Eigen::RowVectorXd norms = a.value().colwise().norm();
  for (Index j = 0; j < norms.size(); ++j) {
    if (norms(j) == 0.0) throw InvalidArgument("col_normalize: column " + std::to_string(j) + " has zero norm");
  }
  Matrix y = a.value() * norms.cwiseInverse().asDiagonal();
  const auto ai = a.id();
  return a.tape().push(Op::ColNormalize, {ai}, std::move(y), [ai, norms](Tape& t, std::size_t self) {
    if (!t.needs_grad(ai)) return;
    const Matrix& yv = t.value(self);
    const Matrix& g = t.adjoint(self);
    Eigen::RowVectorXd proj = yv.cwiseProduct(g).colwise().sum();
    Matrix d = g - yv * proj.asDiagonal();
    t.adjoint_mut(ai) += d * norms.cwiseInverse().asDiagonal();
  });
}

inline Var sum(const Var& a) {
  const auto ai = a.id();
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return a.tape().push(Op::Sum, {ai}, std::move(y), [ai](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ai);
    detail::accumulate(t, ai, Matrix::Constant(x.rows(), x.cols(), t.adjoint(self)(0, 0)));
  });
}

inline Var mean(const Var& a) {
  const auto ai = a.id();
  const double count = static_cast<double>(a.value().size());
  if (count == 0) throw InvalidArgument("mean: empty matrix");
  Matrix y(1, 1);
  y(0, 0) = a.value().sum() / count;
  return a.tape().push(Op::Mean, {ai}, std::move(y), [ai, count](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ai);
    detail::accumulate(t, ai, Matrix::Constant(x.rows(), x.cols(), t.adjoint(self)(0, 0) / count));
  });
}

// N x D -> N x 1.
inline Var row_sum(const Var& a) {
  const auto ai = a.id();
  return a.tape().push(Op::RowSum, {ai}, a.value().rowwise().sum(), [ai](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ai);
    detail::accumulate(t, ai, t.adjoint(self).col(0).replicate(1, x.cols()));
  });
}

// N x D -> 1 x D.
inline Var col_sum(const Var& a) {
  const auto ai = a.id();
  return a.tape().push(Op::ColSum, {ai}, a.value().colwise().sum(), [ai](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ai);
    detail::accumulate(t, ai, t.adjoint(self).row(0).replicate(x.rows(), 1));
  });
}

// Output row k = a.row(index[k]).
inline Var gather_rows(const Var& a, std::vector<Index> index) {
  const Matrix& x = a.value();
  Matrix y(static_cast<Index>(index.size()), x.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= x.rows()) throw InvalidArgument("gather_rows: index out of range");
    y.row(static_cast<Index>(k)) = x.row(index[k]);
  }
  const auto ai = a.id();
  return a.tape().push(Op::GatherRows, {ai}, std::move(y), [ai, index = std::move(index)](Tape& t, std::size_t self) {
    if (!t.needs_grad(ai)) return;
    const Matrix& g = t.adjoint(self);
    Matrix& d = t.adjoint_mut(ai);
    for (std::size_t k = 0; k < index.size(); ++k) d.row(index[k]) += g.row(static_cast<Index>(k));
  });
}

// Output (rows x D) with row index[k] accumulating a.row(k). Adjoint of gather.
inline Var scatter_add_rows(const Var& a, std::vector<Index> index, Index rows) {
  if (static_cast<Index>(index.size()) != a.rows()) throw InvalidArgument("scatter_add_rows: one index per row required");
  const Matrix& x = a.value();
  Matrix y = Matrix::Zero(rows, x.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= rows) throw InvalidArgument("scatter_add_rows: index out of range");
    y.row(index[k]) += x.row(static_cast<Index>(k));
  }
  const auto ai = a.id();
  return a.tape().push(Op::ScatterAddRows, {ai}, std::move(y),
                       [ai, index = std::move(index)](Tape& t, std::size_t self) {
                         if (!t.needs_grad(ai)) return;
                         const Matrix& g = t.adjoint(self);
                         Matrix& d = t.adjoint_mut(ai);
                         for (std::size_t k = 0; k < index.size(); ++k) d.row(static_cast<Index>(k)) += g.row(index[k]);
                       });
}

inline Var slice_rows(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw InvalidArgument("slice_rows: range out of bounds");
  const auto ai = a.id();
  return a.tape().push(Op::SliceRows, {ai}, a.value().middleRows(start, count),
                       [ai, start, count](Tape& t, std::size_t self) {
                         if (t.needs_grad(ai)) t.adjoint_mut(ai).middleRows(start, count) += t.adjoint(self);
                       });
}

inline Var slice_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw InvalidArgument("slice_cols: range out of bounds");
  const auto ai = a.id();
  return a.tape().push(Op::SliceCols, {ai}, a.value().middleCols(start, count),
                       [ai, start, count](Tape& t, std::size_t self) {
                         if (t.needs_grad(ai)) t.adjoint_mut(ai).middleCols(start, count) += t.adjoint(self);
                       });
}

// ---------------------------------------------------------------------------
// Finite-difference verification

// Scalar function of a flat parameter vector that also reports its analytic
// gradient when `grad` is non-null.
using ScalarFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

// Central differences against the analytic gradient. Returns the max over
// coordinates of |fd - analytic| / max(1, |analytic|). Coordinates with
// |x_i| < 10h are skipped when `skip_near_zero` is set, so kinks sitting at a
// parameter's origin do not register.
inline double finite_diff_check(const ScalarFn& f, const Eigen::VectorXd& x0, double h, bool skip_near_zero = true) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_check: h must be positive");
  Eigen::VectorXd analytic(x0.size());
  f(x0, &analytic);
  double worst = 0.0;
  Eigen::VectorXd x = x0;
  for (Index i = 0; i < x0.size(); ++i) {
    if (skip_near_zero && std::abs(x0(i)) < 10.0 * h) continue;
    x(i) = x0(i) + h;
    const double fp = f(x, nullptr);
    x(i) = x0(i) - h;
    const double fm = f(x, nullptr);
    x(i) = x0(i);
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic(i)) / std::max(1.0, std::abs(analytic(i))));
  }
  return worst;
}

// Builds a function over the concatenation of `shapes`-shaped matrices from a
// graph-building callback; each input is a parameter leaf on a fresh tape.
using GraphFn = std::function<Var(Tape&, std::span<const Var>)>;

inline ScalarFn tape_function(GraphFn build, std::vector<std::pair<Index, Index>> shapes) {
  return [build = std::move(build), shapes = std::move(shapes)](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    Tape tape;
    std::vector<Var> inputs;
    Index offset = 0;
    for (auto [r, c] : shapes) {
      Matrix m = Eigen::Map<const Matrix>(x.data() + offset, r, c);
      inputs.push_back(tape.parameter(std::move(m)));
      offset += r * c;
    }
    Var out = build(tape, inputs);
    if (grad) {
      auto g = tape.backward(out);
      grad->resize(x.size());
      offset = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix& gm = g[inputs[k]];
        Eigen::Map<Matrix>(grad->data() + offset, gm.rows(), gm.cols()) = gm;
        offset += gm.size();
      }
    }
    return out.value()(0, 0);
  };
}

inline Eigen::VectorXd flatten(std::span<const Matrix> mats) {
  Index total = 0;
  for (const auto& m : mats) total += m.size();
  Eigen::VectorXd v(total);
  Index offset = 0;
  for (const auto& m : mats) {
    Eigen::Map<Matrix>(v.data() + offset, m.rows(), m.cols()) = m;
    offset += m.size();
  }
  return v;
}

}  // namespace ftgcl::ad
