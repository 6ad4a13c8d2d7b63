#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddimlab/tensor.hpp"

namespace ddimlab {

/// An n x d batch of datapoints or latent seeds, with the provenance needed
/// to regenerate it bitwise.
struct PointSet {
  Tensor points;  // n x d
  std::string label;
  std::uint64_t rng_seed = 0;

  int size() const { return points.rows(); }
  int dim() const { return points.ndim() == 2 ? points.shape[1] : 0; }
};

/// Invertible per-axis affine map produced by normalize().
struct AffineTransform {
  std::vector<double> mean;
  std::vector<double> scale;  // per-axis std removed by normalize

  Tensor apply(const Tensor& pts) const;    // (x - mean) / scale
  Tensor invert(const Tensor& pts) const;   // x * scale + mean
};

/// Points uniform in angle on each circle, round-robin across radii, plus
/// isotropic Gaussian jitter.
PointSet gen_circles(int n, const std::vector<double>& radii, double noise_std, std::uint64_t rng_seed);

/// Two interleaving half-circles: upper arc (cos t, sin t), lower arc
/// (1 - cos t, 1/2 - sin t), t uniform in [0, pi], Gaussian jitter, then
/// centered by the arcs' analytic mean (1/2, 1/4).
PointSet gen_two_moons(int n, double noise_std, std::uint64_t rng_seed);

/// Isotropic Gaussian clusters, round-robin center assignment.
PointSet gen_blobs(int n, const std::vector<std::vector<double>>& centers, double cluster_std, std::uint64_t rng_seed);

/// Regular lattice over a d-box, corners included, row-major order.
PointSet gen_grid(const std::vector<std::pair<double, double>>& bounds, int resolution);

/// Zero mean, unit per-axis standard deviation (population divisor n).
std::pair<PointSet, AffineTransform> normalize(const PointSet& ps);

}  // namespace ddimlab
