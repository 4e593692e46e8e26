#include "erlab/autodiff.hpp"

#include <cmath>
#include <string>

namespace erlab::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

Tape& tape_of(Var a) { return *a.tape(); }

Matrix row_major_reshape(const Matrix& a, Eigen::Index rows, Eigen::Index cols) {
  const RowMajor rm = a;
  return Eigen::Map<const RowMajor>(rm.data(), rows, cols);
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionError("scalar() on a non-scalar node");
  return v(0, 0);
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.leaf = false;
  for (const Var& in : inputs) {
    check(in);
    n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::check(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw std::logic_error("variable does not belong to this tape");
}

const Matrix& Tape::grad(std::size_t id) const {
  static const Matrix empty;
  return nodes_[id].grad.size() ? nodes_[id].grad : empty;
}

void Tape::accumulate(Var target, const Matrix& g) {
  Node& n = nodes_[target.id()];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var seed) {
  check(seed);
  if (nodes_[seed.id()].value.size() != 1) {
    throw DimensionError("backward seed must be scalar-valued, got " + std::to_string(seed.rows()) + "x" +
                         std::to_string(seed.cols()));
  }
  backward(seed, Matrix::Ones(1, 1));
}

void Tape::backward(Var seed, const Matrix& cotangent) {
  check(seed);
  for (auto& n : nodes_)
    if (!n.leaf) n.grad.resize(0, 0);
  if (!nodes_[seed.id()].needs_grad) return;
  accumulate(seed, cotangent);
  for (std::size_t id = seed.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.leaf || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.resize(0, 0);
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  return tape_of(a).record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return tape_of(a).record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape(a, b, "hadamard");
  return tape_of(a).record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  return tape_of(a).record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
  return tape_of(a).record(a.value().array() + s, {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
  return tape_of(a).record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var transpose(Var a) {
  return tape_of(a).record(a.value().transpose(), {a},
                           [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw DimensionError("add_row: row must be 1 x cols(a)");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return tape_of(a).record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var tanh(Var a) {
  Matrix y = a.value().array().tanh();
  return tape_of(a).record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var relu(Var a) {
  Matrix y = a.value().cwiseMax(0.0);
  return tape_of(a).record(y, {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Var square(Var a) {
  return tape_of(a).record(a.value().array().square(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (2.0 * g.array() * a.value().array()).matrix());
  });
}

Var exp(Var a) {
  Matrix y = a.value().array().exp();
  return tape_of(a).record(y, {a}, [a, y](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(y)); });
}

Var log(Var a) {
  return tape_of(a).record(a.value().array().log(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseQuotient(a.value()));
  });
}

Var sum(Var a) {
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().mean()), {a}, [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

Var sum_squares(Var a) {
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().squaredNorm()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, 2.0 * g(0, 0) * a.value());
  });
}

Var dot(Var a, Var b) {
  require_same_shape(a, b, "dot");
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().cwiseProduct(b.value()).sum()), {a, b},
                           [a, b](Tape& t, const Matrix& g) {
                             if (t.needs_grad(a)) t.accumulate(a, g(0, 0) * b.value());
                             if (t.needs_grad(b)) t.accumulate(b, g(0, 0) * a.value());
                           });
}

Var trace(Var a) {
  if (a.rows() != a.cols()) throw DimensionError("trace needs a square matrix");
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().trace()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g(0, 0) * Matrix::Identity(a.rows(), a.cols()));
  });
}

Var param_block(Var flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& f = flat.value();
  if (f.cols() != 1 && f.rows() != 1) throw DimensionError("param_block expects a flat vector");
  if (offset < 0 || offset + rows * cols > f.size()) throw DimensionError("param_block out of range");
  Matrix out = Eigen::Map<const RowMajor>(f.data() + offset, rows, cols);
  return tape_of(flat).record(std::move(out), {flat}, [flat, offset, rows, cols](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(flat.rows(), flat.cols());
    Eigen::Map<RowMajor>(full.data() + offset, rows, cols) = g;
    t.accumulate(flat, full);
  });
}

Var reshape_rows(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw DimensionError("reshape_rows: element count changes");
  const Eigen::Index r0 = a.rows(), c0 = a.cols();
  return tape_of(a).record(row_major_reshape(a.value(), rows, cols), {a}, [a, r0, c0](Tape& t, const Matrix& g) {
    t.accumulate(a, row_major_reshape(g, r0, c0));
  });
}

Var covariance(Var z) {
  const Matrix& zv = z.value();
  if (zv.rows() < 2) throw DegenerateBatchError("covariance needs at least 2 rows, got " + std::to_string(zv.rows()));
  const double denom = static_cast<double>(zv.rows() - 1);
  Matrix centered = zv.rowwise() - zv.colwise().mean();
  Matrix cov = erlab::covariance(zv);
  return tape_of(z).record(std::move(cov), {z}, [z, centered, denom](Tape& t, const Matrix& g) {
    // Centered columns sum to zero, so the centering projection drops out.
    t.accumulate(z, centered * (g + g.transpose()) / denom);
  });
}

Var logdet_psd(Var m) {
  const Matrix& mv = m.value();
  if (mv.rows() != mv.cols()) throw DimensionError("logdet_psd needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(mv);
  if (es.info() != Eigen::Success) throw FactorizationError("eigendecomposition did not converge", -1, 0.0);
  const Vector& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i) > 0.0)) {
      throw FactorizationError("matrix is not positive definite: eigenvalue " + std::to_string(i) + " = " +
                                   std::to_string(ev(i)),
                               i, ev(i));
    }
  }
  Matrix vecs = es.eigenvectors();
  Vector inv = ev.cwiseInverse();
  return tape_of(m).record(Matrix::Constant(1, 1, ev.array().log().sum()), {m},
                           [m, vecs, inv](Tape& t, const Matrix& g) {
                             t.accumulate(m, g(0, 0) * (vecs * inv.asDiagonal() * vecs.transpose()));
                           });
}

Var row_softmax_entropy(Var z) {
  const Matrix& zv = z.value();
  const Eigen::Index b = zv.rows();
  Matrix logq(zv.rows(), zv.cols());
  Vector h(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = zv.row(i).maxCoeff();
    const double lse = mx + std::log((zv.row(i).array() - mx).exp().sum());
    logq.row(i) = zv.row(i).array() - lse;
    h(i) = -(logq.row(i).array().exp() * logq.row(i).array()).sum();
  }
  return tape_of(z).record(Matrix::Constant(1, 1, h.mean()), {z}, [z, logq, h, b](Tape& t, const Matrix& g) {
    Matrix dz = -(logq.array().exp() * (logq.array().colwise() + h.array()));
    t.accumulate(z, dz * (g(0, 0) / static_cast<double>(b)));
  });
}

Var softmax_cross_entropy(Var logits, Var targets) {
  require_same_shape(logits, targets, "softmax_cross_entropy");
  const Matrix& z = logits.value();
  const Matrix& y = targets.value();
  const Eigen::Index b = z.rows();
  Matrix logq(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    logq.row(i) = z.row(i).array() - lse;
  }
  const double loss = -(y.array() * logq.array()).sum() / static_cast<double>(b);
  return tape_of(logits).record(Matrix::Constant(1, 1, loss), {logits, targets},
                                [logits, targets, logq, b](Tape& t, const Matrix& g) {
                                  const double s = g(0, 0) / static_cast<double>(b);
                                  const Matrix& y = targets.value();
                                  if (t.needs_grad(logits)) {
                                    Matrix q = logq.array().exp();
                                    Matrix dz = q.array().colwise() * y.rowwise().sum().array() - y.array();
                                    t.accumulate(logits, dz * s);
                                  }
                                  if (t.needs_grad(targets)) t.accumulate(targets, -logq * s);
                                });
}

Var mse(Var a, Var b) {
  require_same_shape(a, b, "mse");
  const double n = static_cast<double>(a.value().size());
  Matrix diff = a.value() - b.value();
  return tape_of(a).record(Matrix::Constant(1, 1, diff.squaredNorm() / n), {a, b},
                           [a, b, diff, n](Tape& t, const Matrix& g) {
                             const Matrix d = diff * (2.0 * g(0, 0) / n);
                             t.accumulate(a, d);
                             t.accumulate(b, -d);
                           });
}

Var segment_attention(Var q, Var k, Var v, Eigen::Index seq_len) {
  require_same_shape(q, k, "segment_attention");
  if (v.rows() != q.rows()) throw DimensionError("segment_attention: value rows differ from query rows");
  if (seq_len < 1 || q.rows() % seq_len != 0) throw DimensionError("segment_attention: rows not divisible by seq_len");
  const Eigen::Index groups = q.rows() / seq_len;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  std::vector<Matrix> weights(static_cast<std::size_t>(groups));
  Matrix out(q.rows(), v.cols());
  for (Eigen::Index b = 0; b < groups; ++b) {
    const Eigen::Index r = b * seq_len;
    Matrix s = qv.middleRows(r, seq_len) * kv.middleRows(r, seq_len).transpose() * inv_sqrt;
    for (Eigen::Index i = 0; i < seq_len; ++i) {
      s.row(i) = (s.row(i).array() - s.row(i).maxCoeff()).exp();
      s.row(i) /= s.row(i).sum();
    }
    out.middleRows(r, seq_len) = s * vv.middleRows(r, seq_len);
    weights[static_cast<std::size_t>(b)] = std::move(s);
  }
  return tape_of(q).record(
      std::move(out), {q, k, v}, [q, k, v, weights, seq_len, inv_sqrt](Tape& t, const Matrix& g) {
        const Matrix& qv = q.value();
        const Matrix& kv = k.value();
        const Matrix& vv = v.value();
        Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
        Matrix dk = Matrix::Zero(kv.rows(), kv.cols());
        Matrix dv = Matrix::Zero(vv.rows(), vv.cols());
        for (std::size_t b = 0; b < weights.size(); ++b) {
          const Eigen::Index r = static_cast<Eigen::Index>(b) * seq_len;
          const Matrix& a = weights[b];
          const auto go = g.middleRows(r, seq_len);
          dv.middleRows(r, seq_len) = a.transpose() * go;
          const Matrix da = go * vv.middleRows(r, seq_len).transpose();
          const Vector row_dot = (da.array() * a.array()).rowwise().sum();
          const Matrix ds = a.array() * (da.array().colwise() - row_dot.array());
          dq.middleRows(r, seq_len) = ds * kv.middleRows(r, seq_len) * inv_sqrt;
          dk.middleRows(r, seq_len) = ds.transpose() * qv.middleRows(r, seq_len) * inv_sqrt;
        }
        t.accumulate(q, dq);
        t.accumulate(k, dk);
        t.accumulate(v, dv);
      });
}

Var segment_mean(Var a, Eigen::Index seq_len) {
  if (seq_len < 1 || a.rows() % seq_len != 0) throw DimensionError("segment_mean: rows not divisible by seq_len");
  const Eigen::Index groups = a.rows() / seq_len;
  Matrix out(groups, a.cols());
  for (Eigen::Index b = 0; b < groups; ++b) out.row(b) = a.value().middleRows(b * seq_len, seq_len).colwise().mean();
  return tape_of(a).record(std::move(out), {a}, [a, seq_len, groups](Tape& t, const Matrix& g) {
    Matrix d(a.rows(), a.cols());
    for (Eigen::Index b = 0; b < groups; ++b)
      d.middleRows(b * seq_len, seq_len) = g.row(b).replicate(seq_len, 1) / static_cast<double>(seq_len);
    t.accumulate(a, d);
  });
}

}  // namespace erlab::ad
