#pragma once

#include <functional>
#include <vector>

#include "ddimlab/tensor.hpp"

namespace ddimlab {

struct Var {
  int id = -1;
};

/// One recorded primitive: inputs by node id, the stored forward value, and
/// whatever the local gradient rule needs (silu keeps its sigmoid buffer).
struct TapeNode {
  OpKind op = OpKind::Sum;
  bool is_leaf = false;
  bool requires_grad = false;  // leaf flag, or any-input-requires for interior nodes
  int a = -1;
  int b = -1;
  double c = 0.0;  // ScalarMul coefficient
  Tensor value;
  std::vector<double> aux;
};

/// Gradients per leaf, shaped like the leaves. Leaves that never reach the
/// loss keep zero gradients.
class GradientMap {
 public:
  explicit GradientMap(std::size_t nodes) : grads_(nodes) {}
  const Tensor& at(Var v) const { return grads_[static_cast<std::size_t>(v.id)]; }
  Tensor& slot(int id) { return grads_[static_cast<std::size_t>(id)]; }

 private:
  std::vector<Tensor> grads_;
};

/// Record of one forward computation. Nodes are appended in topological
/// order; the forward value of every node is stored so backward never
/// recomputes. Single-threaded by construction.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var broadcast_add(Var a, Var row);
  Var mul(Var a, Var b);
  Var scalar_mul(Var a, double c);
  Var concat_cols(Var a, Var b);
  Var tanh(Var a);
  Var silu(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var squared_error(Var a, Var b);

  const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  std::size_t size() const { return nodes_.size(); }
  const TapeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Reverse sweep from a scalar loss node. Throws if the loss is not scalar.
  GradientMap backward(Var loss) const;

  /// Recompute every non-leaf value from stored leaves; true when all stored
  /// outputs are reproduced bitwise.
  bool replay_matches() const;

 private:
  Var push(TapeNode n);
  std::vector<TapeNode> nodes_;
};

/// Max over coordinates of |analytic - central difference| relative error for
/// a scalar tape function, the workhorse numeric oracle. `f` receives a tape
/// and the leaf var for `point` and must return the scalar loss var.
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point, double step);

}  // namespace ddimlab
