#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace ddimlab {

/// Dense row-major tensor of 64-bit reals. Rank 1 or 2 is all this project
/// needs; shape is kept as a vector so the invariant product(shape) ==
/// data.size() stays explicit.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);  // zero-filled

  static Tensor from(std::vector<int> s, std::vector<double> data);
  static Tensor scalar(double x);
  static Tensor zeros_like(const Tensor& t);
  static Tensor full(std::vector<int> s, double x);

  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

// Plain (untaped) arithmetic. Every kernel runs a fixed summation order so
// repeated calls are bitwise identical.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor broadcast_add(const Tensor& a, const Tensor& row);  // row added to each row of a
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor tanh_op(const Tensor& a);
Tensor silu_op(const Tensor& a);
Tensor sum_op(const Tensor& a);                       // scalar
Tensor mean_op(const Tensor& a);                      // scalar
Tensor squared_error(const Tensor& a, const Tensor& b);  // scalar sum of (a-b)^2

/// Squared Euclidean norm of each row.
std::vector<double> row_sq_norms(const Tensor& a);

/// Branch-free logistic with ~1e-13 relative accuracy; NaN propagates.
/// Plain arithmetic end to end so activation loops vectorize.
double fast_sigmoid(double x);

/// Op kinds accepted by forward_primitive.
enum class OpKind {
  MatMul,
  Add,
  BroadcastAdd,
  ElementwiseMul,
  ScalarMul,
  ConcatLastAxis,
  Tanh,
  Silu,
  Sum,
  Mean,
  SquaredError,
};

const char* op_name(OpKind k);

/// Uniform entry point over the primitive set; `c` is only read by ScalarMul.
Tensor forward_primitive(OpKind kind, const std::vector<const Tensor*>& inputs, double c = 0.0);

[[noreturn]] void throw_shape_error(const char* op, const Tensor& a, const Tensor& b);

}  // namespace ddimlab
