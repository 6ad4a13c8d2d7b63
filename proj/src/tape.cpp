#include "ddimlab/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ddimlab {

Var Tape::push(TapeNode n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  TapeNode n;
  n.is_leaf = true;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

namespace {

bool any_grad(const Tape& t, Var a, Var b = Var{-1}) {
  bool g = t.node(a.id).requires_grad;
  if (b.id >= 0) g = g || t.node(b.id).requires_grad;
  return g;
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  TapeNode n;
  n.op = OpKind::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = any_grad(*this, a, b);
  n.value = ddimlab::matmul(val(a), val(b));
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  TapeNode n;
  n.op = OpKind::Add;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = any_grad(*this, a, b);
  n.value = ddimlab::add(val(a), val(b));
  return push(std::move(n));
}

Var Tape::broadcast_add(Var a, Var row) {
  TapeNode n;
  n.op = OpKind::BroadcastAdd;
  n.a = a.id;
  n.b = row.id;
  n.requires_grad = any_grad(*this, a, row);
  n.value = ddimlab::broadcast_add(val(a), val(row));
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  TapeNode n;
  n.op = OpKind::ElementwiseMul;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = any_grad(*this, a, b);
  n.value = ddimlab::mul(val(a), val(b));
  return push(std::move(n));
}

Var Tape::scalar_mul(Var a, double c) {
  TapeNode n;
  n.op = OpKind::ScalarMul;
  n.a = a.id;
  n.c = c;
  n.requires_grad = any_grad(*this, a);
  n.value = ddimlab::scalar_mul(val(a), c);
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  TapeNode n;
  n.op = OpKind::ConcatLastAxis;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = any_grad(*this, a, b);
  n.value = ddimlab::concat_cols(val(a), val(b));
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  TapeNode n;
  n.op = OpKind::Tanh;
  n.a = a.id;
  n.requires_grad = any_grad(*this, a);
  n.value = tanh_op(val(a));
  return push(std::move(n));
}

Var Tape::silu(Var a) {
  TapeNode n;
  n.op = OpKind::Silu;
  n.a = a.id;
  n.requires_grad = any_grad(*this, a);
  const Tensor& x = val(a);
  n.value = Tensor::zeros_like(x);
  n.aux.resize(x.v.size());
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double s = fast_sigmoid(x.v[i]);
    n.aux[i] = s;
    n.value.v[i] = x.v[i] * s;
  }
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  TapeNode n;
  n.op = OpKind::Sum;
  n.a = a.id;
  n.requires_grad = any_grad(*this, a);
  n.value = sum_op(val(a));
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  TapeNode n;
  n.op = OpKind::Mean;
  n.a = a.id;
  n.requires_grad = any_grad(*this, a);
  n.value = mean_op(val(a));
  return push(std::move(n));
}

Var Tape::squared_error(Var a, Var b) {
  TapeNode n;
  n.op = OpKind::SquaredError;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = any_grad(*this, a, b);
  n.value = ddimlab::squared_error(val(a), val(b));
  return push(std::move(n));
}

namespace {

void accumulate(Tensor& slot, const Tensor& shape_ref, const std::function<void(Tensor&)>& addin) {
  if (slot.v.empty()) slot = Tensor::zeros_like(shape_ref);
  addin(slot);
}

void axpy(Tensor& dst, const Tensor& src, double scale = 1.0) {
  for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += scale * src.v[i];
}

}  // namespace

GradientMap Tape::backward(Var loss) const {
  const TapeNode& ln = nodes_.at(static_cast<std::size_t>(loss.id));
  if (ln.value.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + ln.value.shape_str());
  }

  std::vector<Tensor> adj(nodes_.size());
  adj[static_cast<std::size_t>(loss.id)] = Tensor::full(ln.value.shape, 1.0);

  GradientMap out(nodes_.size());

  for (int id = loss.id; id >= 0; --id) {
    const TapeNode& n = nodes_[static_cast<std::size_t>(id)];
    Tensor& g = adj[static_cast<std::size_t>(id)];
    if (g.v.empty() || !n.requires_grad) continue;
    if (n.is_leaf) continue;

    const auto want = [&](int in) { return in >= 0 && nodes_[static_cast<std::size_t>(in)].requires_grad; };
    const auto in_val = [&](int in) -> const Tensor& { return nodes_[static_cast<std::size_t>(in)].value; };

    switch (n.op) {
      case OpKind::MatMul: {
        if (want(n.a)) {
          Tensor da = matmul_nt(g, in_val(n.b));
          Tensor& slot = adj[static_cast<std::size_t>(n.a)];
          if (slot.v.empty()) {
            slot = std::move(da);  // first contribution needs no accumulation pass
          } else {
            axpy(slot, da);
          }
        }
        if (want(n.b)) {
          Tensor db = matmul_tn(in_val(n.a), g);
          Tensor& slot = adj[static_cast<std::size_t>(n.b)];
          if (slot.v.empty()) {
            slot = std::move(db);
          } else {
            axpy(slot, db);
          }
        }
        break;
      }
      case OpKind::Add: {
        if (want(n.a)) accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) { axpy(s, g); });
        if (want(n.b)) accumulate(adj[static_cast<std::size_t>(n.b)], in_val(n.b), [&](Tensor& s) { axpy(s, g); });
        break;
      }
      case OpKind::BroadcastAdd: {
        if (want(n.a)) accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) { axpy(s, g); });
        if (want(n.b)) {
          const int rows = g.shape[0], colsn = g.shape[1];
          accumulate(adj[static_cast<std::size_t>(n.b)], in_val(n.b), [&](Tensor& s) {
            for (int i = 0; i < rows; ++i) {
              const double* grow = g.data() + static_cast<std::size_t>(i) * colsn;
              for (int j = 0; j < colsn; ++j) s.v[static_cast<std::size_t>(j)] += grow[j];
            }
          });
        }
        break;
      }
      case OpKind::ElementwiseMul: {
        if (want(n.a)) {
          accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) {
            const Tensor& bv = in_val(n.b);
            for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] += g.v[i] * bv.v[i];
          });
        }
        if (want(n.b)) {
          accumulate(adj[static_cast<std::size_t>(n.b)], in_val(n.b), [&](Tensor& s) {
            const Tensor& av = in_val(n.a);
            for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] += g.v[i] * av.v[i];
          });
        }
        break;
      }
      case OpKind::ScalarMul: {
        if (want(n.a)) accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) { axpy(s, g, n.c); });
        break;
      }
      case OpKind::ConcatLastAxis: {
        const Tensor& av = in_val(n.a);
        const Tensor& bv = in_val(n.b);
        const int rows = av.shape[0], ka = av.shape[1], kb = bv.shape[1];
        if (want(n.a)) {
          accumulate(adj[static_cast<std::size_t>(n.a)], av, [&](Tensor& s) {
            for (int i = 0; i < rows; ++i) {
              const double* grow = g.data() + static_cast<std::size_t>(i) * (ka + kb);
              double* srow = s.data() + static_cast<std::size_t>(i) * ka;
              for (int j = 0; j < ka; ++j) srow[j] += grow[j];
            }
          });
        }
        if (want(n.b)) {
          accumulate(adj[static_cast<std::size_t>(n.b)], bv, [&](Tensor& s) {
            for (int i = 0; i < rows; ++i) {
              const double* grow = g.data() + static_cast<std::size_t>(i) * (ka + kb) + ka;
              double* srow = s.data() + static_cast<std::size_t>(i) * kb;
              for (int j = 0; j < kb; ++j) srow[j] += grow[j];
            }
          });
        }
        break;
      }
      case OpKind::Tanh: {
        if (want(n.a)) {
          accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) {
            for (std::size_t i = 0; i < s.v.size(); ++i) {
              const double y = n.value.v[i];
              s.v[i] += g.v[i] * (1.0 - y * y);
            }
          });
        }
        break;
      }
      case OpKind::Silu: {
        if (want(n.a)) {
          accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) {
            const Tensor& x = in_val(n.a);
            for (std::size_t i = 0; i < s.v.size(); ++i) {
              const double sg = n.aux[i];
              s.v[i] += g.v[i] * sg * (1.0 + x.v[i] * (1.0 - sg));
            }
          });
        }
        break;
      }
      case OpKind::Sum: {
        if (want(n.a)) {
          const double gv = g.v[0];
          accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) {
            for (double& e : s.v) e += gv;
          });
        }
        break;
      }
      case OpKind::Mean: {
        if (want(n.a)) {
          const double gv = g.v[0] / static_cast<double>(in_val(n.a).numel());
          accumulate(adj[static_cast<std::size_t>(n.a)], in_val(n.a), [&](Tensor& s) {
            for (double& e : s.v) e += gv;
          });
        }
        break;
      }
      case OpKind::SquaredError: {
        const Tensor& av = in_val(n.a);
        const Tensor& bv = in_val(n.b);
        const double gv = g.v[0];
        if (want(n.a)) {
          accumulate(adj[static_cast<std::size_t>(n.a)], av, [&](Tensor& s) {
            for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] += gv * 2.0 * (av.v[i] - bv.v[i]);
          });
        }
        if (want(n.b)) {
          accumulate(adj[static_cast<std::size_t>(n.b)], bv, [&](Tensor& s) {
            for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] -= gv * 2.0 * (av.v[i] - bv.v[i]);
          });
        }
        break;
      }
    }
    // Interior adjoints are dead once consumed.
    if (!n.is_leaf) g = Tensor();
  }

  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const TapeNode& n = nodes_[id];
    if (!n.is_leaf || !n.requires_grad) continue;
    if (adj[id].v.empty()) {
      out.slot(static_cast<int>(id)) = Tensor::zeros_like(n.value);
    } else {
      out.slot(static_cast<int>(id)) = std::move(adj[id]);
    }
  }
  return out;
}

bool Tape::replay_matches() const {
  for (const TapeNode& n : nodes_) {
    if (n.is_leaf) continue;
    const Tensor& av = nodes_[static_cast<std::size_t>(n.a)].value;
    Tensor re;
    switch (n.op) {
      case OpKind::MatMul: re = ddimlab::matmul(av, nodes_[static_cast<std::size_t>(n.b)].value); break;
      case OpKind::Add: re = ddimlab::add(av, nodes_[static_cast<std::size_t>(n.b)].value); break;
      case OpKind::BroadcastAdd: re = ddimlab::broadcast_add(av, nodes_[static_cast<std::size_t>(n.b)].value); break;
      case OpKind::ElementwiseMul: re = ddimlab::mul(av, nodes_[static_cast<std::size_t>(n.b)].value); break;
      case OpKind::ScalarMul: re = ddimlab::scalar_mul(av, n.c); break;
      case OpKind::ConcatLastAxis: re = ddimlab::concat_cols(av, nodes_[static_cast<std::size_t>(n.b)].value); break;
      case OpKind::Tanh: re = tanh_op(av); break;
      case OpKind::Silu: re = silu_op(av); break;
      case OpKind::Sum: re = sum_op(av); break;
      case OpKind::Mean: re = mean_op(av); break;
      case OpKind::SquaredError: re = ddimlab::squared_error(av, nodes_[static_cast<std::size_t>(n.b)].value); break;
    }
    if (re.shape != n.value.shape) return false;
    if (std::memcmp(re.data(), n.value.data(), re.v.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point, double step) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

  Tape tape;
  Var x = tape.leaf(point, true);
  Var loss = f(tape, x);
  GradientMap g = tape.backward(loss);
  const Tensor& analytic = g.at(x);

  const auto eval = [&](const Tensor& p) {
    Tape t;
    Var xv = t.leaf(p, false);
    Var l = f(t, xv);
    return t.val(l).v[0];
  };

  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < probe.v.size(); ++i) {
    const double orig = probe.v[i];
    probe.v[i] = orig + step;
    const double fp = eval(probe);
    probe.v[i] = orig - step;
    const double fm = eval(probe);
    probe.v[i] = orig;
    const double cd = (fp - fm) / (2.0 * step);
    const double rel = std::abs(analytic.v[i] - cd) / std::max(1e-8, std::abs(cd));
    if (!(rel <= worst)) worst = rel;  // NaN propagates into worst
  }
  return worst;
}

}  // namespace ddimlab
