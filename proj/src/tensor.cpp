#include "hgs/tensor.hpp"

#include <cmath>
#include <limits>

#include "hgs/errors.hpp"
#include "hgs/parameters.hpp"

namespace hgs {

std::string shape_string(const Tensor2& t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

const Tensor2& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), nullptr, Tensor2(), nullptr, false});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(ParameterStore& store, int index) {
  auto& leaves = param_leaf_[&store];
  if (auto it = leaves.find(index); it != leaves.end()) return Var{this, it->second};
  Node node{Tensor2(), &store.at(index).value, Tensor2(), nullptr, record_};
  if (record_) {
    ParameterStore* owner = &store;
    node.backward = [owner, index](Tape& tape, int self) {
      auto& g = owner->at(index).grad;
      if (g.size() == 0) g = Tensor2::Zero(owner->at(index).value.rows(), owner->at(index).value.cols());
      g += tape.grad(self);
    };
  }
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  leaves.emplace(index, id);
  return Var{this, id};
}

Var Tape::parameter(ParameterStore& store, const std::string& name) {
  return parameter(store, store.index_of(name));
}

Var Tape::push(Tensor2 value, std::vector<int> inputs, Backward backward) {
  bool needs = false;
  if (record_) {
    for (int id : inputs) needs = needs || nodes_[id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), nullptr, Tensor2(), needs ? std::move(backward) : nullptr, needs});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor2& Tape::grad_buffer(int id) {
  auto& node = nodes_[id];
  if (node.grad.size() == 0) node.grad = Tensor2::Zero(value(id).rows(), value(id).cols());
  return node.grad;
}

void Tape::backward(Var root) {
  if (!record_) throw ContractError("backward on a non-recording tape");
  if (root.rows() != 1 || root.cols() != 1)
    throw ShapeError("backward root must be 1x1, got " + shape_string(root.value()));
  if (!nodes_[root.id].requires_grad) return;
  accumulate(root.id, Tensor2::Ones(1, 1));
  for (int id = root.id; id >= 0; --id) {
    auto& node = nodes_[id];
    if (node.backward && node.grad.size() != 0) node.backward(*this, id);
  }
}

void Tape::clear() {
  nodes_.clear();
  param_leaf_.clear();
}

namespace {

void require_same(const char* op, const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
}

void require(bool ok, const char* op, const Tensor2& a, const Tensor2& b) {
  if (!ok)
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                     shape_string(b));
}

Tape& tape_of(Var a) { return *a.tape; }

using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Var matmul(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require(A.cols() == B.rows(), "matmul", A, B);
  Tensor2 out = A * B;
  return tape_of(a).push(std::move(out), {a.id, b.id}, [a, b](Tape& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
    if (t.requires_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require(A.cols() == B.cols(), "matmul_nt", A, B);
  Tensor2 out = A * B.transpose();
  return tape_of(a).push(std::move(out), {a.id, b.id}, [a, b](Tape& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(b.id));
    if (t.requires_grad(b.id)) t.accumulate(b.id, g.transpose() * t.value(a.id));
  });
}

Var linear(Var x, Var weight) { return matmul_nt(x, weight); }

Var linear(Var x, Var weight, Var bias) {
  const auto& X = x.value();
  const auto& W = weight.value();
  const auto& b = bias.value();
  require(X.cols() == W.cols(), "linear", X, W);
  require(b.rows() == 1 && b.cols() == W.rows(), "linear(bias)", W, b);
  Tensor2 out = X * W.transpose();
  out.rowwise() += b.row(0);
  return tape_of(x).push(std::move(out), {x.id, weight.id, bias.id},
                         [x, weight, bias](Tape& t, int self) {
                           const auto& g = t.grad(self);
                           if (t.requires_grad(x.id)) t.accumulate(x.id, g * t.value(weight.id));
                           if (t.requires_grad(weight.id))
                             t.accumulate(weight.id, g.transpose() * t.value(x.id));
                           if (t.requires_grad(bias.id)) t.accumulate(bias.id, g.colwise().sum());
                         });
}

Var add(Var a, Var b) {
  require_same("add", a.value(), b.value());
  Tensor2 out = a.value() + b.value();
  return tape_of(a).push(std::move(out), {a.id, b.id}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate(b.id, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a.value(), b.value());
  Tensor2 out = a.value() - b.value();
  return tape_of(a).push(std::move(out), {a.id, b.id}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    if (t.requires_grad(b.id)) t.accumulate(b.id, -t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  const auto& A = a.value();
  const auto& R = row.value();
  require(R.rows() == 1 && R.cols() == A.cols(), "add_row", A, R);
  Tensor2 out = A;
  out.rowwise() += R.row(0);
  return tape_of(a).push(std::move(out), {a.id, row.id}, [a, row](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    if (t.requires_grad(row.id)) t.accumulate(row.id, t.grad(self).colwise().sum());
  });
}

Var add_col(Var a, Var col) {
  const auto& A = a.value();
  const auto& C = col.value();
  require(C.cols() == 1 && C.rows() == A.rows(), "add_col", A, C);
  Tensor2 out = A;
  out.colwise() += C.col(0);
  return tape_of(a).push(std::move(out), {a.id, col.id}, [a, col](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self));
    if (t.requires_grad(col.id)) t.accumulate(col.id, t.grad(self).rowwise().sum());
  });
}

Var scale(Var a, double s) {
  Tensor2 out = a.value() * s;
  return tape_of(a).push(std::move(out), {a.id}, [a, s](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self) * s);
  });
}

Var mul_scalar(Var a, Var s) {
  if (s.rows() != 1 || s.cols() != 1)
    throw ShapeError("mul_scalar: scalar operand is " + shape_string(s.value()));
  Tensor2 out = a.value() * s.scalar();
  return tape_of(a).push(std::move(out), {a.id, s.id}, [a, s](Tape& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * t.value(s.id)(0, 0));
    if (t.requires_grad(s.id)) {
      Tensor2 gs(1, 1);
      gs(0, 0) = g.cwiseProduct(t.value(a.id)).sum();
      t.accumulate(s.id, gs);
    }
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  const auto& A = a.value();
  if (rows * cols != A.size())
    throw ShapeError("reshape: " + shape_string(A) + " to (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + ")");
  Tensor2 out = Eigen::Map<const Tensor2>(A.data(), rows, cols);
  const auto r0 = A.rows();
  const auto c0 = A.cols();
  return tape_of(a).push(std::move(out), {a.id}, [a, r0, c0](Tape& t, int self) {
    const auto& g = t.grad(self);
    t.accumulate(a.id, Eigen::Map<const Tensor2>(g.data(), r0, c0));
  });
}

Var mul_const(Var a, const Tensor2& c) {
  require_same("mul_const", a.value(), c);
  Tensor2 out = a.value().cwiseProduct(c);
  return tape_of(a).push(std::move(out), {a.id}, [a, c](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self).cwiseProduct(c));
  });
}

Var transpose(Var a) {
  Tensor2 out = a.value().transpose();
  return tape_of(a).push(std::move(out), {a.id}, [a](Tape& t, int self) {
    t.accumulate(a.id, t.grad(self).transpose());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", parts.front().value(), p.value());
    cols += p.cols();
    ids.push_back(p.id);
  }
  Tensor2 out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().tape->push(std::move(out), ids, [parts](Tape& t, int self) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      const auto c = t.value(p.id).cols();
      if (t.requires_grad(p.id)) t.accumulate(p.id, t.grad(self).middleCols(at, c));
      at += c;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", parts.front().value(), p.value());
    rows += p.rows();
    ids.push_back(p.id);
  }
  Tensor2 out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().tape->push(std::move(out), ids, [parts](Tape& t, int self) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      const auto r = t.value(p.id).rows();
      if (t.requires_grad(p.id)) t.accumulate(p.id, t.grad(self).middleRows(at, r));
      at += r;
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const auto& A = a.value();
  if (start < 0 || count < 0 || start + count > A.cols())
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") out of " + shape_string(A));
  Tensor2 out = A.middleCols(start, count);
  return tape_of(a).push(std::move(out), {a.id}, [a, start, count](Tape& t, int self) {
    t.grad_buffer(a.id).middleCols(start, count) += t.grad(self);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  const auto& A = a.value();
  if (start < 0 || count < 0 || start + count > A.rows())
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") out of " + shape_string(A));
  Tensor2 out = A.middleRows(start, count);
  return tape_of(a).push(std::move(out), {a.id}, [a, start, count](Tape& t, int self) {
    t.grad_buffer(a.id).middleRows(start, count) += t.grad(self);
  });
}

Var gather_rows(Var a, const std::vector<int>& rows) {
  const auto& A = a.value();
  Tensor2 out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= A.rows())
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " out of " +
                       shape_string(A));
    out.row(static_cast<Eigen::Index>(r)) = A.row(rows[r]);
  }
  return tape_of(a).push(std::move(out), {a.id}, [a, rows](Tape& t, int self) {
    auto& g = t.grad_buffer(a.id);
    const auto& go = t.grad(self);
    for (std::size_t r = 0; r < rows.size(); ++r) g.row(rows[r]) += go.row(static_cast<Eigen::Index>(r));
  });
}

Var select_rows(const std::vector<bool>& take_a, Var a, Var b) {
  require_same("select_rows", a.value(), b.value());
  if (static_cast<Eigen::Index>(take_a.size()) != a.rows())
    throw ShapeError("select_rows: selector length " + std::to_string(take_a.size()) +
                     " vs " + shape_string(a.value()));
  Tensor2 out = b.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    if (take_a[r]) out.row(r) = a.value().row(r);
  return tape_of(a).push(std::move(out), {a.id, b.id}, [take_a, a, b](Tape& t, int self) {
    const auto& g = t.grad(self);
    Tensor2 ga = Tensor2::Zero(g.rows(), g.cols());
    Tensor2 gb = Tensor2::Zero(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) (take_a[r] ? ga : gb).row(r) = g.row(r);
    t.accumulate(a.id, ga);
    t.accumulate(b.id, gb);
  });
}

Var relu(Var a) {
  Tensor2 out = a.value().cwiseMax(0.0);
  return tape_of(a).push(std::move(out), {a.id}, [a](Tape& t, int self) {
    t.accumulate(a.id, (t.value(a.id).array() > 0.0).cast<double>().matrix().cwiseProduct(t.grad(self)));
  });
}

Var tanh(Var a) {
  Tensor2 out = a.value().array().tanh().matrix();
  return tape_of(a).push(std::move(out), {a.id}, [a](Tape& t, int self) {
    const auto& y = t.value(self);
    t.accumulate(a.id, ((1.0 - y.array().square()) * t.grad(self).array()).matrix());
  });
}

Var mean_rows(Var a) {
  const auto n = a.rows();
  if (n == 0) throw ShapeError("mean_rows: empty input " + shape_string(a.value()));
  Tensor2 out = a.value().colwise().mean();
  return tape_of(a).push(std::move(out), {a.id}, [a, n](Tape& t, int self) {
    t.grad_buffer(a.id).rowwise() += t.grad(self).row(0) / static_cast<double>(n);
  });
}

Var sum_rows(Var a) {
  Tensor2 out = a.value().colwise().sum();
  return tape_of(a).push(std::move(out), {a.id}, [a](Tape& t, int self) {
    t.grad_buffer(a.id).rowwise() += t.grad(self).row(0);
  });
}

Var sum_all(Var a) {
  Tensor2 out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).push(std::move(out), {a.id}, [a](Tape& t, int self) {
    t.grad_buffer(a.id).array() += t.grad(self)(0, 0);
  });
}

Var pick(Var a, Eigen::Index r, Eigen::Index c) {
  const auto& A = a.value();
  if (r < 0 || r >= A.rows() || c < 0 || c >= A.cols())
    throw ShapeError("pick: (" + std::to_string(r) + "," + std::to_string(c) + ") out of " +
                     shape_string(A));
  Tensor2 out(1, 1);
  out(0, 0) = A(r, c);
  return tape_of(a).push(std::move(out), {a.id}, [a, r, c](Tape& t, int self) {
    t.grad_buffer(a.id)(r, c) += t.grad(self)(0, 0);
  });
}

namespace {

void require_mask(const char* op, const Tensor2& x, const Mask& mask) {
  if (x.rows() != mask.rows() || x.cols() != mask.cols())
    throw ShapeError(std::string(op) + ": logits " + shape_string(x) + " vs mask (" +
                     std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) + ")");
}

}  // namespace

Var masked_softmax(Var logits, const Mask& mask, EmptyRow empty) {
  const auto& X = logits.value();
  require_mask("masked_softmax", X, mask);
  Tensor2 out = Tensor2::Zero(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      if (mask(r, c)) best = std::max(best, X(r, c));
    if (best == -std::numeric_limits<double>::infinity()) {
      if (empty == EmptyRow::kError)
        throw ContractError("masked_softmax: row " + std::to_string(r) + " has no admitted entry");
      continue;
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (mask(r, c)) {
        out(r, c) = std::exp(X(r, c) - best);
        total += out(r, c);
      }
    }
    out.row(r) /= total;
  }
  return tape_of(logits).push(std::move(out), {logits.id}, [logits](Tape& t, int self) {
    const auto& p = t.value(self);
    const auto& g = t.grad(self);
    Tensor2 dx = p.cwiseProduct(g);
    const Eigen::VectorXd dot = dx.rowwise().sum();
    dx -= p.cwiseProduct(dot.replicate(1, p.cols()));
    t.accumulate(logits.id, dx);
  });
}

Var masked_log_softmax(Var logits, const Mask& mask) {
  const auto& X = logits.value();
  require_mask("masked_log_softmax", X, mask);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Tensor2 out = Tensor2::Constant(X.rows(), X.cols(), kNegInf);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double best = kNegInf;
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      if (mask(r, c)) best = std::max(best, X(r, c));
    if (best == kNegInf)
      throw ContractError("masked_log_softmax: row " + std::to_string(r) + " has no admitted entry");
    double total = 0.0;
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      if (mask(r, c)) total += std::exp(X(r, c) - best);
    const double lse = best + std::log(total);
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      if (mask(r, c)) out(r, c) = X(r, c) - lse;
  }
  return tape_of(logits).push(std::move(out), {logits.id}, [logits, mask](Tape& t, int self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    Tensor2 dx = Tensor2::Zero(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      double gsum = 0.0;
      for (Eigen::Index c = 0; c < y.cols(); ++c)
        if (mask(r, c)) gsum += g(r, c);
      for (Eigen::Index c = 0; c < y.cols(); ++c)
        if (mask(r, c)) dx(r, c) = g(r, c) - std::exp(y(r, c)) * gsum;
    }
    t.accumulate(logits.id, dx);
  });
}

Var instance_norm(Var x, Var gain, Var bias, double eps) {
  const auto& X = x.value();
  require(gain.rows() == 1 && gain.cols() == X.cols(), "instance_norm(gain)", X, gain.value());
  require(bias.rows() == 1 && bias.cols() == X.cols(), "instance_norm(bias)", X, bias.value());
  const double n = static_cast<double>(X.rows());
  const Eigen::RowVectorXd mean = X.colwise().mean();
  Tensor2 centered = X.rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
  const Eigen::RowVectorXd inv_std = (var.array() + eps).rsqrt();
  Tensor2 xhat = centered.array().rowwise() * inv_std.array();
  Tensor2 out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return tape_of(x).push(
      std::move(out), {x.id, gain.id, bias.id},
      [x, gain, bias, xhat = std::move(xhat), inv_std, n](Tape& t, int self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(gain.id))
          t.accumulate(gain.id, g.cwiseProduct(xhat).colwise().sum());
        if (t.requires_grad(bias.id)) t.accumulate(bias.id, g.colwise().sum());
        if (t.requires_grad(x.id)) {
          Tensor2 dxhat = g.array().rowwise() * t.value(gain.id).row(0).array();
          const Eigen::RowVectorXd s1 = dxhat.colwise().sum();
          const Eigen::RowVectorXd s2 = dxhat.cwiseProduct(xhat).colwise().sum();
          Tensor2 dx = (dxhat * n).rowwise() - s1;
          dx -= (xhat.array().rowwise() * s2.array()).matrix();
          dx = (dx.array().rowwise() * (inv_std.array() / n)).matrix();
          t.accumulate(x.id, dx);
        }
      });
}

Var edge_mlp(Var score, Var edge, Var w1, Var w2) {
  const auto& S = score.value();
  const auto& E = edge.value();
  const auto& W1 = w1.value();
  const auto& W2 = w2.value();
  require_same("edge_mlp", S, E);
  require(W1.cols() == 2 && W2.rows() == 1 && W2.cols() == W1.rows(), "edge_mlp(weights)", W1, W2);
  Tensor2 out = Tensor2::Zero(S.rows(), S.cols());
  for (Eigen::Index r = 0; r < W1.rows(); ++r) {
    out.array() += W2(0, r) * (W1(r, 0) * S.array() + W1(r, 1) * E.array()).max(0.0);
  }
  return tape_of(score).push(
      std::move(out), {score.id, edge.id, w1.id, w2.id}, [score, edge, w1, w2](Tape& t, int self) {
        const auto& S = t.value(score.id);
        const auto& E = t.value(edge.id);
        const auto& W1 = t.value(w1.id);
        const auto& W2 = t.value(w2.id);
        const auto& g = t.grad(self);
        const bool need_s = t.requires_grad(score.id);
        const bool need_e = t.requires_grad(edge.id);
        Tensor2 dS = Tensor2::Zero(S.rows(), S.cols());
        Tensor2 dE = Tensor2::Zero(S.rows(), S.cols());
        Tensor2 dW1 = Tensor2::Zero(W1.rows(), 2);
        Tensor2 dW2 = Tensor2::Zero(1, W1.rows());
        for (Eigen::Index r = 0; r < W1.rows(); ++r) {
          const RowArray pre = W1(r, 0) * S.array() + W1(r, 1) * E.array();
          const RowArray active = (pre > 0.0).cast<double>();
          dW2(0, r) = (g.array() * pre.max(0.0)).sum();
          const RowArray dpre = g.array() * active * W2(0, r);
          dW1(r, 0) = (dpre * S.array()).sum();
          dW1(r, 1) = (dpre * E.array()).sum();
          if (need_s) dS.array() += W1(r, 0) * dpre;
          if (need_e) dE.array() += W1(r, 1) * dpre;
        }
        if (need_s) t.accumulate(score.id, dS);
        if (need_e) t.accumulate(edge.id, dE);
        t.accumulate(w1.id, dW1);
        t.accumulate(w2.id, dW2);
      });
}

}  // namespace hgs
