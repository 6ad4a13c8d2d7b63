#include "ddimlab/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace ddimlab {

namespace {

#ifdef __GLIBC__
// Tape buffers of a few hundred KB are allocated and freed once per recorded
// op; keeping them inside the arena instead of mmap round trips matters at
// thousands of tapes per second.
const bool malloc_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

std::int64_t shape_numel(const std::vector<int>& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    n *= d;
  }
  return n;
}

void require_2d(const char* op, const Tensor& t) {
  if (t.ndim() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got shape " + t.shape_str());
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), v(static_cast<std::size_t>(shape_numel(shape)), 0.0) {}

Tensor Tensor::from(std::vector<int> s, std::vector<double> data) {
  if (shape_numel(s) != static_cast<std::int64_t>(data.size())) {
    throw std::invalid_argument("Tensor::from: shape does not match data length");
  }
  Tensor t;
  t.shape = std::move(s);
  t.v = std::move(data);
  if (!t.all_finite()) throw std::invalid_argument("Tensor::from: non-finite entry");
  return t;
}

Tensor Tensor::scalar(double x) {
  // op results may legitimately carry non-finite values; only literal
  // construction via from() validates
  Tensor t;
  t.shape = {1};
  t.v = {x};
  return t;
}

Tensor Tensor::zeros_like(const Tensor& t) {
  Tensor z;
  z.shape = t.shape;
  z.v.assign(t.v.size(), 0.0);
  return z;
}

Tensor Tensor::full(std::vector<int> s, double x) {
  Tensor t(std::move(s));
  for (double& e : t.v) e = x;
  return t;
}

bool Tensor::all_finite() const {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

void throw_shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  const int n = a.shape[0], k = a.shape[1], m = b.shape[1];
  if (b.shape[0] != k) throw_shape_error("matmul", a, b);
  Tensor c({n, m});
  const double* __restrict__ pa = a.data();
  const double* __restrict__ pb = b.data();
  double* __restrict__ pc = c.data();
  // ikj with the k loop unrolled by 4. Each row runs the same code path, so
  // a row's result does not depend on its position in the batch; the
  // summation order is fixed, so repeated calls are bitwise identical.
  for (int i = 0; i < n; ++i) {
    double* __restrict__ crow = pc + static_cast<std::size_t>(i) * m;
    const double* __restrict__ arow = pa + static_cast<std::size_t>(i) * k;
    int p = 0;
    for (; p + 4 <= k; p += 4) {
      const double a0 = arow[p], a1 = arow[p + 1], a2 = arow[p + 2], a3 = arow[p + 3];
      const double* __restrict__ b0 = pb + static_cast<std::size_t>(p) * m;
      const double* __restrict__ b1 = b0 + m;
      const double* __restrict__ b2 = b1 + m;
      const double* __restrict__ b3 = b2 + m;
      for (int j = 0; j < m; ++j) crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
    }
    for (; p < k; ++p) {
      const double av = arow[p];
      const double* __restrict__ brow = pb + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d("matmul_nt", a);
  require_2d("matmul_nt", b);
  const int n = a.shape[0], k = a.shape[1], m = b.shape[0];
  if (b.shape[1] != k) throw_shape_error("matmul_nt", a, b);
  // Row-dot formulations are reductions the compiler cannot vectorize; one
  // explicit transpose turns this into the streaming nn kernel.
  Tensor bt({k, m});
  {
    const double* pb = b.data();
    double* pt = bt.data();
    for (int j = 0; j < m; ++j) {
      const double* __restrict__ brow = pb + static_cast<std::size_t>(j) * k;
      for (int p = 0; p < k; ++p) pt[static_cast<std::size_t>(p) * m + j] = brow[p];
    }
  }
  return matmul(a, bt);
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_2d("matmul_tn", a);
  require_2d("matmul_tn", b);
  const int n = a.shape[0], k = a.shape[1], m = b.shape[1];
  if (b.shape[0] != n) throw_shape_error("matmul_tn", a, b);
  Tensor c({k, m});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (int i = 0; i < n; ++i) {
    const double* __restrict__ arow = pa + static_cast<std::size_t>(i) * k;
    const double* __restrict__ brow = pb + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      double* __restrict__ crow = pc + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw_shape_error("add", a, b);
  Tensor c = a;
  const double* pb = b.data();
  double* pc = c.data();
  const std::size_t n = c.v.size();
  for (std::size_t i = 0; i < n; ++i) pc[i] += pb[i];
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw_shape_error("sub", a, b);
  Tensor c = a;
  const double* pb = b.data();
  double* pc = c.data();
  const std::size_t n = c.v.size();
  for (std::size_t i = 0; i < n; ++i) pc[i] -= pb[i];
  return c;
}

Tensor broadcast_add(const Tensor& a, const Tensor& row) {
  require_2d("broadcast-add", a);
  const int n = a.shape[0], m = a.shape[1];
  if (static_cast<std::int64_t>(m) != row.numel()) throw_shape_error("broadcast-add", a, row);
  Tensor c = a;
  const double* pr = row.data();
  for (int i = 0; i < n; ++i) {
    double* crow = c.data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) crow[j] += pr[j];
  }
  return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw_shape_error("elementwise-mul", a, b);
  Tensor c = a;
  const double* pb = b.data();
  double* pc = c.data();
  const std::size_t n = c.v.size();
  for (std::size_t i = 0; i < n; ++i) pc[i] *= pb[i];
  return c;
}

Tensor scalar_mul(const Tensor& a, double c) {
  Tensor r = a;
  for (double& e : r.v) e *= c;
  return r;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_2d("concat-last-axis", a);
  require_2d("concat-last-axis", b);
  if (a.shape[0] != b.shape[0]) throw_shape_error("concat-last-axis", a, b);
  const int n = a.shape[0], ka = a.shape[1], kb = b.shape[1];
  Tensor c({n, ka + kb});
  for (int i = 0; i < n; ++i) {
    double* crow = c.data() + static_cast<std::size_t>(i) * (ka + kb);
    const double* arow = a.data() + static_cast<std::size_t>(i) * ka;
    const double* brow = b.data() + static_cast<std::size_t>(i) * kb;
    for (int j = 0; j < ka; ++j) crow[j] = arow[j];
    for (int j = 0; j < kb; ++j) crow[ka + j] = brow[j];
  }
  return c;
}

Tensor tanh_op(const Tensor& a) {
  Tensor c = a;
  for (double& e : c.v) e = std::tanh(e);
  return c;
}

namespace {

/// exp for |x| <= 45 via 2^n * exp(r): degree-11 polynomial on the reduced
/// range, exponent assembled with the round-to-mantissa trick. No branches,
/// no int conversion, so NaN rows flow through as NaN.
inline double exp_small(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-1;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52

  const double shifted = x * kLog2e + kShift;
  const double n = shifted - kShift;
  const double r = (x - n * kLn2Hi) - n * kLn2Lo;

  double p = 2.08767569878681e-9;  // 1/12!
  p = p * r + 2.50521083854417e-8;
  p = p * r + 2.75573192239859e-7;
  p = p * r + 2.75573192239859e-6;
  p = p * r + 2.48015873015873e-5;
  p = p * r + 1.98412698412698e-4;
  p = p * r + 1.38888888888889e-3;
  p = p * r + 8.33333333333333e-3;
  p = p * r + 4.16666666666667e-2;
  p = p * r + 1.66666666666667e-1;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  const auto bits = std::bit_cast<std::uint64_t>(shifted);
  const double scale = std::bit_cast<double>(((bits + 1023) & 0x7FFULL) << 52);
  return p * scale;
}

[[gnu::always_inline]] inline double sigmoid_impl(double x) {
  // comparisons with NaN are false, so NaN survives the clamp
  double c = x;
  c = c > 40.0 ? 40.0 : c;
  c = c < -40.0 ? -40.0 : c;
  return 1.0 / (1.0 + exp_small(-c));
}

}  // namespace

double fast_sigmoid(double x) { return sigmoid_impl(x); }

Tensor silu_op(const Tensor& a) {
  Tensor c = a;
  for (double& e : c.v) e *= sigmoid_impl(e);
  return c;
}

Tensor sum_op(const Tensor& a) {
  double s = 0.0;
  for (double e : a.v) s += e;
  return Tensor::scalar(s);
}

Tensor mean_op(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double s = 0.0;
  for (double e : a.v) s += e;
  return Tensor::scalar(s / static_cast<double>(a.numel()));
}

Tensor squared_error(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw_shape_error("squared-error", a, b);
  const double* pa = a.data();
  const double* pb = b.data();
  double s = 0.0;
  const std::size_t n = a.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pa[i] - pb[i];
    s += d * d;
  }
  return Tensor::scalar(s);
}

std::vector<double> row_sq_norms(const Tensor& a) {
  require_2d("row_sq_norms", a);
  const int n = a.shape[0], m = a.shape[1];
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * m;
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += row[j] * row[j];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::BroadcastAdd: return "broadcast-add";
    case OpKind::ElementwiseMul: return "elementwise-mul";
    case OpKind::ScalarMul: return "scalar-mul";
    case OpKind::ConcatLastAxis: return "concat-last-axis";
    case OpKind::Tanh: return "tanh";
    case OpKind::Silu: return "silu";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::SquaredError: return "squared-error";
  }
  return "?";
}

Tensor forward_primitive(OpKind kind, const std::vector<const Tensor*>& in, double c) {
  auto need = [&](std::size_t n) {
    if (in.size() != n) {
      throw std::invalid_argument(std::string(op_name(kind)) + ": expects " + std::to_string(n) + " inputs");
    }
  };
  switch (kind) {
    case OpKind::MatMul: need(2); return matmul(*in[0], *in[1]);
    case OpKind::Add: need(2); return add(*in[0], *in[1]);
    case OpKind::BroadcastAdd: need(2); return broadcast_add(*in[0], *in[1]);
    case OpKind::ElementwiseMul: need(2); return mul(*in[0], *in[1]);
    case OpKind::ScalarMul: need(1); return scalar_mul(*in[0], c);
    case OpKind::ConcatLastAxis: need(2); return concat_cols(*in[0], *in[1]);
    case OpKind::Tanh: need(1); return tanh_op(*in[0]);
    case OpKind::Silu: need(1); return silu_op(*in[0]);
    case OpKind::Sum: need(1); return sum_op(*in[0]);
    case OpKind::Mean: need(1); return mean_op(*in[0]);
    case OpKind::SquaredError: need(2); return squared_error(*in[0], *in[1]);
  }
  throw std::invalid_argument("forward_primitive: unknown op");
}

}  // namespace ddimlab
