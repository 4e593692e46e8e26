#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "erlab/linalg.hpp"

// Reverse-mode differentiation over dense double matrices.
//
// A Tape records primitive operations in execution order, so the node list is
// already a topological order. Values are 2-D (vectors are n x 1, scalars
// 1 x 1). Leaves created with variable() own a gradient slot that accumulates
// across backward() calls until zero_grad().
namespace erlab::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Propagates the output gradient into the inputs via Tape::accumulate.
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Matrix value);
  Var constant(Matrix value);
  Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

  /// Records a primitive result. The backward closure runs only when some
  /// input carries a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);

  /// Reverse sweep from a 1 x 1 node. Leaf gradients accumulate.
  void backward(Var seed);
  /// Reverse sweep from any node with an explicit output cotangent.
  void backward(Var seed, const Matrix& cotangent);
  void zero_grad();

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  void accumulate(Var target, const Matrix& g);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
    bool leaf = true;
  };

  void check(Var v) const;

  std::vector<Node> nodes_;
};

// Elementwise and structural primitives.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);
Var transpose(Var a);
/// a (m x n) + broadcast row b (1 x n).
Var add_row(Var a, Var row);
Var tanh(Var a);
Var relu(Var a);
Var square(Var a);
Var exp(Var a);
Var log(Var a);
Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);
Var dot(Var a, Var b);
Var trace(Var a);

/// rows x cols block of a flat vector starting at offset, read row-major.
Var param_block(Var flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);
/// Row-major reshape (the element order of a C array is preserved).
Var reshape_rows(Var a, Eigen::Index rows, Eigen::Index cols);

// Statistical primitives.
Var covariance(Var z);
/// log det of a symmetric positive-definite matrix; backward uses the forward
/// eigendecomposition (V diag(1/lambda) V^T), never an explicit inverse.
Var logdet_psd(Var m);
/// Mean over rows of the Shannon entropy of softmax(row).
Var row_softmax_entropy(Var z);
/// Mean over rows of -sum_j y_j log softmax(logits)_j.
Var softmax_cross_entropy(Var logits, Var targets);
/// Mean over all entries of (a - b)^2.
Var mse(Var a, Var b);

/// Single-head scaled dot-product self-attention applied independently to
/// consecutive groups of seq_len rows of Q, K, V (each (B*seq_len) x p).
Var segment_attention(Var q, Var k, Var v, Eigen::Index seq_len);
/// Mean of each consecutive group of seq_len rows: (B*seq_len) x p -> B x p.
Var segment_mean(Var a, Eigen::Index seq_len);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace erlab::ad
