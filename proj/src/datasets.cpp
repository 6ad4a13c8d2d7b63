#include "ddimlab/datasets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ddimlab/rng.hpp"

namespace ddimlab {

Tensor AffineTransform::apply(const Tensor& pts) const {
  const int n = pts.rows(), d = pts.cols();
  if (static_cast<std::size_t>(d) != mean.size()) throw std::invalid_argument("AffineTransform: dimension mismatch");
  Tensor out = pts;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      out.at(i, j) = (pts.at(i, j) - mean[static_cast<std::size_t>(j)]) / scale[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

Tensor AffineTransform::invert(const Tensor& pts) const {
  const int n = pts.rows(), d = pts.cols();
  if (static_cast<std::size_t>(d) != mean.size()) throw std::invalid_argument("AffineTransform: dimension mismatch");
  Tensor out = pts;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      out.at(i, j) = pts.at(i, j) * scale[static_cast<std::size_t>(j)] + mean[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

PointSet gen_circles(int n, const std::vector<double>& radii, double noise_std, std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("gen_circles: n must be >= 1");
  if (radii.empty()) throw std::invalid_argument("gen_circles: radii must be non-empty");
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("gen_circles: radii must be positive");
  }
  if (noise_std < 0.0) throw std::invalid_argument("gen_circles: noise_std must be >= 0");

  RngStream rng(rng_seed, "dataset.circles");
  Tensor pts({n, 2});
  for (int i = 0; i < n; ++i) {
    const double r = radii[static_cast<std::size_t>(i) % radii.size()];
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    pts.at(i, 0) = r * std::cos(a) + noise_std * rng.gaussian();
    pts.at(i, 1) = r * std::sin(a) + noise_std * rng.gaussian();
  }
  return PointSet{std::move(pts), "circles", rng_seed};
}

PointSet gen_two_moons(int n, double noise_std, std::uint64_t rng_seed) {
  if (n < 2) throw std::invalid_argument("gen_two_moons: n must be >= 2");
  if (noise_std < 0.0) throw std::invalid_argument("gen_two_moons: noise_std must be >= 0");

  RngStream rng(rng_seed, "dataset.two-moons");
  Tensor pts({n, 2});
  for (int i = 0; i < n; ++i) {
    const double t = rng.uniform(0.0, std::numbers::pi);
    double x, y;
    if (i % 2 == 0) {
      x = std::cos(t);
      y = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    // Analytic mean of the two arcs; keeps noise-free points on closed-form curves.
    pts.at(i, 0) = x - 0.5 + noise_std * rng.gaussian();
    pts.at(i, 1) = y - 0.25 + noise_std * rng.gaussian();
  }
  return PointSet{std::move(pts), "two-moons", rng_seed};
}

PointSet gen_blobs(int n, const std::vector<std::vector<double>>& centers, double cluster_std, std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("gen_blobs: n must be >= 1");
  if (centers.empty()) throw std::invalid_argument("gen_blobs: centers must be non-empty");
  if (!(cluster_std > 0.0)) throw std::invalid_argument("gen_blobs: cluster_std must be positive");
  const std::size_t d = centers.front().size();
  for (const auto& c : centers) {
    if (c.size() != d) throw std::invalid_argument("gen_blobs: centers must share a dimension");
  }

  RngStream rng(rng_seed, "dataset.blobs");
  Tensor pts({n, static_cast<int>(d)});
  for (int i = 0; i < n; ++i) {
    const auto& c = centers[static_cast<std::size_t>(i) % centers.size()];
    for (std::size_t j = 0; j < d; ++j) {
      pts.at(i, static_cast<int>(j)) = c[j] + cluster_std * rng.gaussian();
    }
  }
  return PointSet{std::move(pts), "blobs", rng_seed};
}

PointSet gen_grid(const std::vector<std::pair<double, double>>& bounds, int resolution) {
  if (bounds.empty()) throw std::invalid_argument("gen_grid: bounds must be non-empty");
  if (resolution < 2) throw std::invalid_argument("gen_grid: resolution must be >= 2 per axis");
  for (const auto& [lo, hi] : bounds) {
    if (!(hi > lo)) throw std::invalid_argument("gen_grid: degenerate box");
  }
  const int d = static_cast<int>(bounds.size());
  int n = 1;
  for (int j = 0; j < d; ++j) n *= resolution;

  Tensor pts({n, d});
  for (int i = 0; i < n; ++i) {
    int rem = i;
    // Row-major: last axis varies fastest.
    for (int j = d - 1; j >= 0; --j) {
      const int k = rem % resolution;
      rem /= resolution;
      const auto& [lo, hi] = bounds[static_cast<std::size_t>(j)];
      pts.at(i, j) = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(resolution - 1);
    }
  }
  return PointSet{std::move(pts), "grid", 0};
}

std::pair<PointSet, AffineTransform> normalize(const PointSet& ps) {
  const int n = ps.size(), d = ps.dim();
  if (n < 2) throw std::invalid_argument("normalize: need at least 2 points");

  AffineTransform tf;
  tf.mean.assign(static_cast<std::size_t>(d), 0.0);
  tf.scale.assign(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += ps.points.at(i, j);
    tf.mean[static_cast<std::size_t>(j)] = s / n;
  }
  for (int j = 0; j < d; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = ps.points.at(i, j) - tf.mean[static_cast<std::size_t>(j)];
      s += e * e;
    }
    const double sd = std::sqrt(s / n);
    if (!(sd > 0.0)) throw std::invalid_argument("normalize: zero-variance axis " + std::to_string(j));
    tf.scale[static_cast<std::size_t>(j)] = sd;
  }

  PointSet out;
  out.points = tf.apply(ps.points);
  out.label = ps.label;
  out.rng_seed = ps.rng_seed;
  return {std::move(out), std::move(tf)};
}

}  // namespace ddimlab
