#pragma once

#include <cstdint>
#include <vector>

#include "ddimlab/tensor.hpp"

namespace ddimlab {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive-moment state. One (m, v) pair per parameter
/// tensor; `step` counts completed updates.
struct AdamState {
  std::int64_t step = 0;
  AdamParams hp;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam(const std::vector<const Tensor*>& params, AdamParams hp);

/// In-place update of `params`. Deterministic elementwise arithmetic in a
/// fixed order; two identical calls from identical state give identical
/// results.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, AdamState& state);

}  // namespace ddimlab
