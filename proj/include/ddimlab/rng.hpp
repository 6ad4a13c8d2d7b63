#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ddimlab {

/// Counter-based random stream. Every consumer of randomness opens its own
/// named stream derived from (run_seed, tag, index), so draws in one part of
/// a run never shift the draws of another. Same inputs, same sequence, on any
/// platform with IEEE doubles.
class RngStream {
 public:
  RngStream(std::uint64_t run_seed, std::string_view tag, std::uint64_t index = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; pairs are cached, order is fixed.
  double gaussian();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::vector<int> permutation(int n);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ddimlab
