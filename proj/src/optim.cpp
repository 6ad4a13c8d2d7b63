#include "ddimlab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ddimlab {

AdamState make_adam(const std::vector<const Tensor*>& params, AdamParams hp) {
  AdamState s;
  s.hp = hp;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* p : params) {
    s.m.push_back(Tensor::zeros_like(*p));
    s.v.push_back(Tensor::zeros_like(*p));
  }
  return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  state.step += 1;
  const double b1 = state.hp.beta1;
  const double b2 = state.hp.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (!p.same_shape(g) || !p.same_shape(m)) throw_shape_error("adam_step", p, g);
    for (std::size_t i = 0; i < p.v.size(); ++i) {
      m.v[i] = b1 * m.v[i] + (1.0 - b1) * g.v[i];
      v.v[i] = b2 * v.v[i] + (1.0 - b2) * g.v[i] * g.v[i];
      const double mhat = m.v[i] / c1;
      const double vhat = v.v[i] / c2;
      p.v[i] -= state.hp.lr * mhat / (std::sqrt(vhat) + state.hp.eps);
    }
  }
}

}  // namespace ddimlab
