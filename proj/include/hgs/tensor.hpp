#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace hgs {

// Dense row-major double matrix. Shapes are fixed once created.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// Boolean adjacency / candidate mask; true = admitted.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_string(const Tensor2& t);

class Tape;
class ParameterStore;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor2& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

// Reverse-mode recorder. Every primitive appends a node holding its forward
// value and, when recording and some input needs a gradient, a closure that
// pushes the node's gradient to its inputs. Parameters are leaves bound to a
// ParameterStore entry; backward() adds their gradients into the store.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor2 value);
  // One leaf per (store, parameter) until clear(). Leaves alias the store's
  // values, so the store must not change shape while the tape is alive.
  Var parameter(ParameterStore& store, int index);
  Var parameter(ParameterStore& store, const std::string& name);

  // Seeds d(root) = 1 for a 1x1 root and propagates to every parameter leaf.
  void backward(Var root);

  // Drops all nodes; outstanding Vars become invalid.
  void clear();
  std::size_t size() const { return nodes_.size(); }

  const Tensor2& value(int id) const {
    const auto& node = nodes_[id];
    return node.external ? *node.external : node.value;
  }
  // Gradient buffer of a node; empty (0x0) when nothing flowed into it.
  const Tensor2& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // For primitive implementations.
  Var push(Tensor2 value, std::vector<int> inputs, Backward backward);
  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    auto& node = nodes_[id];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }
  Tensor2& grad_buffer(int id);

 private:
  struct Node {
    Tensor2 value;
    const Tensor2* external = nullptr;  // parameter leaves read the store directly
    Tensor2 grad;
    Backward backward;
    bool requires_grad = false;
  };
  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const void*, std::unordered_map<int, int>> param_leaf_;
};

enum class EmptyRow { kError, kZero };

// ---- primitives -----------------------------------------------------------
Var matmul(Var a, Var b);                // a * b
Var matmul_nt(Var a, Var b);             // a * b^T
Var linear(Var x, Var weight);           // x * W^T
Var linear(Var x, Var weight, Var bias); // x * W^T + 1 * bias (bias 1 x out)
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row(Var a, Var row);             // broadcast 1 x c over rows
Var add_col(Var a, Var col);             // broadcast r x 1 over columns
Var scale(Var a, double s);
Var mul_scalar(Var a, Var s);            // a times a 1 x 1 Var
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);  // row-major order kept
Var mul_const(Var a, const Tensor2& c);  // elementwise by a constant
Var transpose(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, const std::vector<int>& rows);
// Row r of the result comes from `a` if take_a[r], else from `b`.
Var select_rows(const std::vector<bool>& take_a, Var a, Var b);
Var relu(Var a);
Var tanh(Var a);
Var mean_rows(Var a);                    // 1 x c
Var sum_rows(Var a);                     // 1 x c
Var sum_all(Var a);                      // 1 x 1
Var pick(Var a, Eigen::Index r, Eigen::Index c);  // 1 x 1
// Row-wise softmax over admitted entries; masked entries get exactly 0.
Var masked_softmax(Var logits, const Mask& mask, EmptyRow empty = EmptyRow::kError);
// Row-wise log-softmax over admitted entries; masked entries hold -inf.
Var masked_log_softmax(Var logits, const Mask& mask);
// Column-wise standardization over rows with learned per-column gain/bias.
Var instance_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Elementwise two-layer map of (score, edge) pairs:
//   out = sum_r w2[r] * relu(w1[r,0] * score + w1[r,1] * edge)
// w1 is d_z x 2, w2 is 1 x d_z; score and edge share a shape.
Var edge_mlp(Var score, Var edge, Var w1, Var w2);

}  // namespace hgs
