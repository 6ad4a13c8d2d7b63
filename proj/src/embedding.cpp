#include "ddimlab/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ddimlab/rng.hpp"

namespace ddimlab {

namespace {

constexpr int kMaxRowsPerTape = 256;

double sq_dist_row(const Tensor& a, int row, const std::vector<double>& x) {
  double s = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    const double d = a.at(row, j) - x[static_cast<std::size_t>(j)];
    s += d * d;
  }
  return s;
}

double sq_dist_rows(const Tensor& a, int ra, const Tensor& b, int rb) {
  double s = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    const double d = a.at(ra, j) - b.at(rb, j);
    s += d * d;
  }
  return s;
}

}  // namespace

double grav_weight(const std::vector<double>& z, const std::vector<double>& x, double sigma, bool l1_distance) {
  if (!(sigma > 0.0)) throw std::invalid_argument("grav_weight: sigma must be positive");
  if (z.size() != x.size()) throw std::invalid_argument("grav_weight: dimension mismatch");
  const std::size_t d = z.size();
  double sq = 0.0, l1 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double e = x[j] - z[j];
    sq += e * e;
    l1 += std::abs(e);
  }
  const double density =
      std::exp(-sq / (2.0 * sigma * sigma)) / std::pow(2.0 * std::numbers::pi * sigma * sigma, static_cast<double>(d) / 2.0);
  return density * (l1_distance ? l1 : std::sqrt(sq));
}

GravProfile grav_profile(double sigma, const std::vector<double>& r_grid) {
  if (!(sigma > 0.0)) throw std::invalid_argument("grav_profile: sigma must be positive");
  if (r_grid.size() < 2) throw std::invalid_argument("grav_profile: need at least two radii");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0) || (i > 0 && !(r_grid[i] > r_grid[i - 1]))) {
      throw std::invalid_argument("grav_profile: r grid must be positive ascending");
    }
  }

  GravProfile p;
  p.r = r_grid;
  p.weighted.resize(r_grid.size());
  p.gravity.resize(r_grid.size());
  const double dens0 = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    const double r = r_grid[i];
    p.weighted[i] = r * dens0 * std::exp(-r * r / (2.0 * sigma * sigma));
    // Constant-density body of radius sigma: field grows linearly inside,
    // falls off as 1/r^2 outside, continuous at the surface.
    p.gravity[i] = r <= sigma ? r / (sigma * sigma * sigma) : 1.0 / (r * r);
  }

  const auto rescale = [&](std::vector<double>& y) {
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
      integral += 0.5 * (y[i] + y[i + 1]) * (r_grid[i + 1] - r_grid[i]);
    }
    if (!(integral > 0.0)) throw std::runtime_error("grav_profile: degenerate curve");
    for (double& e : y) e /= integral;
  };
  rescale(p.weighted);
  rescale(p.gravity);
  return p;
}

GravMap grav_map(const DenoiserNet& net, const NoiseSchedule& schedule, const PointSet& dataset, const PointSet& grid,
                 int K, double tau, int workers) {
  if (tau < 0.0) throw std::invalid_argument("grav_map: tau must be >= 0");
  GravMap map;
  map.grid = grid;
  map.outputs = generate_batch(net, schedule, grid, K, workers);
  map.tau = tau;
  map.K = K;
  map.net_hash = params_hash(net.mlp);

  const int n = grid.size();
  const int nd = dataset.size();
  map.assignment.assign(static_cast<std::size_t>(n), -1);
  map.distance.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nd; ++k) {
      const double sq = sq_dist_rows(map.outputs.points, i, dataset.points, k);
      if (sq < best_sq) {
        best_sq = sq;
        best = k;
      }
    }
    const double dist = std::sqrt(best_sq);
    if (best >= 0 && dist <= tau) {
      map.assignment[static_cast<std::size_t>(i)] = best;
      map.distance[static_cast<std::size_t>(i)] = dist;
    } else {
      map.distance[static_cast<std::size_t>(i)] = dist;
    }
  }
  return map;
}

SeedCloud emb_cloud_from_grid(const GravMap& map, const std::vector<double>& x, double tol) {
  if (tol < 0.0) throw std::invalid_argument("emb_cloud_from_grid: tol must be >= 0");
  const int n = map.grid.size();
  const int d = map.grid.dim();
  if (x.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("emb_cloud_from_grid: dimension mismatch");

  std::vector<int> hits;
  for (int i = 0; i < n; ++i) {
    if (std::sqrt(sq_dist_row(map.outputs.points, i, x)) <= tol) hits.push_back(i);
  }

  SeedCloud cloud;
  cloud.target = Tensor({1, d});
  for (int j = 0; j < d; ++j) cloud.target.at(0, j) = x[static_cast<std::size_t>(j)];
  cloud.seeds = Tensor({static_cast<int>(hits.size()), d});
  cloud.recon_errors.resize(hits.size());
  cloud.aborted.assign(hits.size(), false);
  for (std::size_t k = 0; k < hits.size(); ++k) {
    for (int j = 0; j < d; ++j) cloud.seeds.at(static_cast<int>(k), j) = map.grid.points.at(hits[k], j);
    cloud.recon_errors[k] = sq_dist_row(map.outputs.points, hits[k], x);
  }
  cloud.meta.K = map.K;
  cloud.meta.net_hash = map.net_hash;
  return cloud;
}

namespace {

struct GdBlockResult {
  Tensor seeds;
  std::vector<double> errors;
  std::vector<bool> aborted;
};

/// Per-row independent descent: row i of `init` is optimized against row i
/// of `targets`. Row results are identical however rows are grouped into
/// blocks, because every op and the Adam update act row-wise.
GdBlockResult descend_seeds(const DenoiserNet& net, const NoiseSchedule& schedule, const Tensor& init,
                            const Tensor& targets, int steps, double lr, int K) {
  const int p = init.rows();
  const int d = init.cols();

  GdBlockResult best;
  best.seeds = init;
  best.errors.assign(static_cast<std::size_t>(p), std::numeric_limits<double>::infinity());
  best.aborted.assign(static_cast<std::size_t>(p), false);

  Tensor current = init;
  AdamParams hp;
  hp.lr = lr;
  AdamState adam = make_adam({&current}, hp);
  const ChainEmbedCache cache = make_chain_cache(net, schedule, K, p);

  for (int iter = 0; iter <= steps; ++iter) {
    Tape tape;
    MlpVars vars = mlp_leaves(tape, net.mlp, false);
    Var zv = tape.leaf(current, true);
    Var out = generate_tape(tape, net, vars, zv, schedule, K, &cache);

    const Tensor& outv = tape.val(out);
    for (int i = 0; i < p; ++i) {
      double err = 0.0;
      for (int j = 0; j < d; ++j) {
        const double e = outv.at(i, j) - targets.at(i, j);
        err += e * e;
      }
      if (!std::isfinite(err)) {
        best.aborted[static_cast<std::size_t>(i)] = true;
        continue;
      }
      if (!best.aborted[static_cast<std::size_t>(i)] && err < best.errors[static_cast<std::size_t>(i)]) {
        best.errors[static_cast<std::size_t>(i)] = err;
        for (int j = 0; j < d; ++j) best.seeds.at(i, j) = current.at(i, j);
      }
    }
    if (iter == steps) break;

    Var tv = tape.constant(targets);
    Var loss = tape.squared_error(out, tv);
    GradientMap g = tape.backward(loss);
    Tensor grad = g.at(zv);
    for (int i = 0; i < p; ++i) {
      if (!best.aborted[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < d; ++j) grad.at(i, j) = 0.0;  // stop touching dead rows
    }
    adam_step({&current}, {&grad}, adam);
  }
  return best;
}

Tensor gather_rows(const Tensor& src, int lo, int hi) {
  Tensor out({hi - lo, src.cols()});
  for (int i = lo; i < hi; ++i) {
    for (int j = 0; j < src.cols(); ++j) out.at(i - lo, j) = src.at(i, j);
  }
  return out;
}

}  // namespace

SeedCloud embed_gd(const DenoiserNet& net, const NoiseSchedule& schedule, const std::vector<double>& target,
                   const EmbedGdOptions& opts, std::uint64_t run_seed, std::uint64_t task_index) {
  if (opts.m < 1) throw std::invalid_argument("embed_gd: m must be >= 1");
  const int d = net.dim;
  if (target.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("embed_gd: target dimension mismatch");

  RngStream rng(run_seed, "embed_gd.init", task_index);
  Tensor init({opts.m, d});
  for (double& e : init.v) e = rng.gaussian();

  Tensor targets({opts.m, d});
  for (int i = 0; i < opts.m; ++i) {
    for (int j = 0; j < d; ++j) targets.at(i, j) = target[static_cast<std::size_t>(j)];
  }

  SeedCloud cloud;
  cloud.target = Tensor({1, d});
  for (int j = 0; j < d; ++j) cloud.target.at(0, j) = target[static_cast<std::size_t>(j)];

  // Blocks keep tape memory bounded; grouping does not change row results.
  GdBlockResult all;
  all.seeds = Tensor({opts.m, d});
  all.errors.assign(static_cast<std::size_t>(opts.m), 0.0);
  all.aborted.assign(static_cast<std::size_t>(opts.m), false);
  for (int lo = 0; lo < opts.m; lo += kMaxRowsPerTape) {
    const int hi = std::min(opts.m, lo + kMaxRowsPerTape);
    GdBlockResult blk = descend_seeds(net, schedule, gather_rows(init, lo, hi), gather_rows(targets, lo, hi),
                                      opts.steps, opts.lr, opts.K);
    for (int i = lo; i < hi; ++i) {
      for (int j = 0; j < d; ++j) all.seeds.at(i, j) = blk.seeds.at(i - lo, j);
      all.errors[static_cast<std::size_t>(i)] = blk.errors[static_cast<std::size_t>(i - lo)];
      all.aborted[static_cast<std::size_t>(i)] = blk.aborted[static_cast<std::size_t>(i - lo)];
    }
  }

  cloud.seeds = std::move(all.seeds);
  cloud.recon_errors = std::move(all.errors);
  cloud.aborted = std::move(all.aborted);
  cloud.meta = SeedCloudMeta{opts.steps, opts.lr, opts.K, params_hash(net.mlp), run_seed};
  return cloud;
}

std::vector<SeedCloud> embed_gd_batch(const DenoiserNet& net, const NoiseSchedule& schedule, const Tensor& targets,
                                      const EmbedGdOptions& opts, std::uint64_t run_seed, int workers) {
  const int count = targets.rows();
  const int d = targets.cols();
  const int m = opts.m;
  const int total = count * m;

  // All rows are independent, so targets are fused into shared tapes; per
  // target RNG streams keep results identical to one-at-a-time runs.
  Tensor init({total, d});
  Tensor tiled({total, d});
  for (int i = 0; i < count; ++i) {
    RngStream rng(run_seed, "embed_gd.init", static_cast<std::uint64_t>(i));
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < d; ++j) {
        init.at(i * m + r, j) = rng.gaussian();
        tiled.at(i * m + r, j) = targets.at(i, j);
      }
    }
  }

  Tensor all_seeds({total, d});
  std::vector<double> all_errors(static_cast<std::size_t>(total), 0.0);
  std::vector<char> all_aborted(static_cast<std::size_t>(total), 0);

  const int blocks = (total + kMaxRowsPerTape - 1) / kMaxRowsPerTape;
  std::atomic_int next{0};
  const auto run_blocks = [&] {
    for (int blk = next.fetch_add(1); blk < blocks; blk = next.fetch_add(1)) {
      const int lo = blk * kMaxRowsPerTape;
      const int hi = std::min(total, lo + kMaxRowsPerTape);
      GdBlockResult res = descend_seeds(net, schedule, gather_rows(init, lo, hi), gather_rows(tiled, lo, hi),
                                        opts.steps, opts.lr, opts.K);
      for (int r = lo; r < hi; ++r) {
        for (int j = 0; j < d; ++j) all_seeds.at(r, j) = res.seeds.at(r - lo, j);
        all_errors[static_cast<std::size_t>(r)] = res.errors[static_cast<std::size_t>(r - lo)];
        all_aborted[static_cast<std::size_t>(r)] = res.aborted[static_cast<std::size_t>(r - lo)] ? 1 : 0;
      }
    }
  };

  const int nw = std::max(1, std::min(workers, blocks));
  if (nw == 1) {
    run_blocks();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(run_blocks);
    for (auto& th : pool) th.join();
  }

  std::vector<SeedCloud> clouds(static_cast<std::size_t>(count));
  const std::uint64_t net_hash = params_hash(net.mlp);
  for (int i = 0; i < count; ++i) {
    SeedCloud& cloud = clouds[static_cast<std::size_t>(i)];
    cloud.target = Tensor({1, d});
    for (int j = 0; j < d; ++j) cloud.target.at(0, j) = targets.at(i, j);
    cloud.seeds = Tensor({m, d});
    cloud.recon_errors.resize(static_cast<std::size_t>(m));
    cloud.aborted.assign(static_cast<std::size_t>(m), false);
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < d; ++j) cloud.seeds.at(r, j) = all_seeds.at(i * m + r, j);
      cloud.recon_errors[static_cast<std::size_t>(r)] = all_errors[static_cast<std::size_t>(i * m + r)];
      cloud.aborted[static_cast<std::size_t>(r)] = all_aborted[static_cast<std::size_t>(i * m + r)] != 0;
    }
    cloud.meta = SeedCloudMeta{opts.steps, opts.lr, opts.K, net_hash, run_seed};
  }
  return clouds;
}

ComboResult convex_combos(const DenoiserNet& net, const NoiseSchedule& schedule, const SeedCloud& cloud, int count,
                          std::uint64_t rng_seed, bool signed_weights) {
  const int m = cloud.size();
  if (m < 2) throw std::invalid_argument("convex_combos: cloud needs at least 2 seeds");
  if (count < 1) throw std::invalid_argument("convex_combos: count must be >= 1");
  const int d = cloud.seeds.cols();

  RngStream rng(rng_seed, "combos");
  ComboResult res;
  res.weights = Tensor({count, m});
  res.combo_seeds = Tensor({count, d});
  for (int c = 0; c < count; ++c) {
    double sum = 0.0;
    if (signed_weights) {
      do {
        sum = 0.0;
        for (int k = 0; k < m; ++k) {
          const double g = rng.gaussian();
          res.weights.at(c, k) = g;
          sum += g;
        }
      } while (std::abs(sum) < 1e-6);
    } else {
      // Dirichlet(1,...,1) via normalized exponentials.
      for (int k = 0; k < m; ++k) {
        double u = rng.uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        const double e = -std::log(u);
        res.weights.at(c, k) = e;
        sum += e;
      }
    }
    for (int k = 0; k < m; ++k) res.weights.at(c, k) /= sum;
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < m; ++k) acc += res.weights.at(c, k) * cloud.seeds.at(k, j);
      res.combo_seeds.at(c, j) = acc;
    }
  }

  const Tensor outs = generate_batch(eps_from_net(net), schedule, res.combo_seeds, cloud.meta.K);
  res.recon_errors.resize(static_cast<std::size_t>(count));
  std::vector<double> tgt(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) tgt[static_cast<std::size_t>(j)] = cloud.target.at(0, j);
  for (int c = 0; c < count; ++c) res.recon_errors[static_cast<std::size_t>(c)] = sq_dist_row(outs, c, tgt);
  return res;
}

std::vector<double> progressive_mean(const DenoiserNet& net, const NoiseSchedule& schedule, const SeedCloud& cloud,
                                     const std::vector<int>& ks) {
  const int m = cloud.size();
  const int d = cloud.seeds.cols();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || ks[i] > m) throw std::invalid_argument("progressive_mean: k out of range");
    if (i > 0 && ks[i] < ks[i - 1]) throw std::invalid_argument("progressive_mean: ks must ascend");
  }

  Tensor means({static_cast<int>(ks.size()), d});
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const int k = ks[i];
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int r = 0; r < k; ++r) s += cloud.seeds.at(r, j);
      means.at(static_cast<int>(i), j) = s / k;
    }
  }
  const Tensor outs = generate_batch(eps_from_net(net), schedule, means, cloud.meta.K);
  std::vector<double> errs(ks.size());
  std::vector<double> tgt(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) tgt[static_cast<std::size_t>(j)] = cloud.target.at(0, j);
  for (std::size_t i = 0; i < ks.size(); ++i) errs[i] = sq_dist_row(outs, static_cast<int>(i), tgt);
  return errs;
}

namespace {

/// Cyclic Jacobi for small symmetric matrices; returns eigenvectors as
/// columns of V.
void jacobi_eigen(std::vector<double>& A, int d, std::vector<double>& V) {
  V.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) V[static_cast<std::size_t>(i) * d + i] = 1.0;
  const auto a = [&](int i, int j) -> double& { return A[static_cast<std::size_t>(i) * d + j]; };
  const auto v = [&](int i, int j) -> double& { return V[static_cast<std::size_t>(i) * d + j]; };

  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) off += a(i, j) * a(i, j);
    }
    if (off < 1e-30) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

PcaResult pca_points(const Tensor& pts) {
  const int m = pts.rows();
  const int d = pts.cols();
  if (m < 2) throw std::invalid_argument("pca: need at least 2 points");

  PcaResult res;
  res.mean.assign(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += pts.at(i, j);
    res.mean[static_cast<std::size_t>(j)] = s / m;
  }

  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) {
      const double ej = pts.at(i, j) - res.mean[static_cast<std::size_t>(j)];
      for (int k = j; k < d; ++k) {
        const double ek = pts.at(i, k) - res.mean[static_cast<std::size_t>(k)];
        cov[static_cast<std::size_t>(j) * d + k] += ej * ek;
      }
    }
  }
  for (int j = 0; j < d; ++j) {
    for (int k = j; k < d; ++k) {
      cov[static_cast<std::size_t>(j) * d + k] /= (m - 1);
      cov[static_cast<std::size_t>(k) * d + j] = cov[static_cast<std::size_t>(j) * d + k];
    }
  }

  std::vector<double> V;
  jacobi_eigen(cov, d, V);

  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return cov[static_cast<std::size_t>(x) * d + x] > cov[static_cast<std::size_t>(y) * d + y];
  });

  res.components = Tensor({d, d});
  res.eigenvalues.resize(static_cast<std::size_t>(d));
  for (int r = 0; r < d; ++r) {
    const int c = order[static_cast<std::size_t>(r)];
    double lambda = cov[static_cast<std::size_t>(c) * d + c];
    if (lambda < 0.0) {
      if (lambda < -1e-12) throw std::runtime_error("pca: eigenvalue below clamp tolerance");
      lambda = 0.0;
    }
    res.eigenvalues[static_cast<std::size_t>(r)] = lambda;
    // Sign convention: the largest-magnitude entry of each component is positive.
    int arg = 0;
    double amax = -1.0;
    for (int j = 0; j < d; ++j) {
      const double e = std::abs(V[static_cast<std::size_t>(j) * d + c]);
      if (e > amax) {
        amax = e;
        arg = j;
      }
    }
    const double flip = V[static_cast<std::size_t>(arg) * d + c] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < d; ++j) res.components.at(r, j) = flip * V[static_cast<std::size_t>(j) * d + c];
  }
  return res;
}

PcaResult pca_cloud(const SeedCloud& cloud) { return pca_points(cloud.seeds); }

Tensor traverse_component(const DenoiserNet& net, const NoiseSchedule& schedule, const SeedCloud& cloud,
                          const PcaResult& pca, int component, const std::vector<double>& factors, int K) {
  const int d = cloud.seeds.cols();
  if (component < 0 || component >= d) throw std::out_of_range("traverse_component: component index out of range");
  const double scale = std::sqrt(pca.eigenvalues[static_cast<std::size_t>(component)]);
  Tensor seeds({static_cast<int>(factors.size()), d});
  for (std::size_t i = 0; i < factors.size(); ++i) {
    for (int j = 0; j < d; ++j) {
      seeds.at(static_cast<int>(i), j) =
          pca.mean[static_cast<std::size_t>(j)] + factors[i] * scale * pca.components.at(component, j);
    }
  }
  return generate_batch(eps_from_net(net), schedule, seeds, K);
}

Mlp init_embed_net(int d, const std::vector<int>& widths, std::uint64_t rng_seed) {
  RngStream rng(rng_seed, "embednet.init");
  return init_mlp(d, d, widths, Activation::Silu, rng);
}

TrainReport train_embed_net(Mlp& enet, const DenoiserNet& net, const NoiseSchedule& schedule, const PointSet& dataset,
                            const EmbedNetTrainOptions& opts, std::uint64_t rng_seed) {
  if (opts.epochs < 1) throw std::invalid_argument("train_embed_net: epochs must be >= 1");
  if (enet.in_dim != net.dim || enet.out_dim != net.dim) {
    throw std::invalid_argument("train_embed_net: inverter must map d -> d");
  }
  const int n = dataset.size();
  const int d = dataset.dim();
  const int b = opts.batch_size;
  const std::uint64_t frozen = params_hash(net.mlp);

  RngStream pick(rng_seed, "embednet.batch");
  std::vector<Tensor*> params = enet.params();
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  AdamState adam = make_adam(cparams, opts.adam);
  const ChainEmbedCache cache = make_chain_cache(net, schedule, opts.K, b);

  const int steps_per_epoch = std::max(1, n / b);
  TrainReport report;
  report.epochs = opts.epochs;
  const double base_lr = opts.adam.lr;
  const std::int64_t total_steps = static_cast<std::int64_t>(opts.epochs) * steps_per_epoch;
  std::int64_t global_step = 0;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    double epoch_sum = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      Tensor x({b, d});
      for (int i = 0; i < b; ++i) {
        const int row = static_cast<int>(pick.below(static_cast<std::uint64_t>(n)));
        for (int j = 0; j < d; ++j) x.at(i, j) = dataset.points.at(row, j);
      }

      Tape tape;
      MlpVars evars = mlp_leaves(tape, enet, true);
      MlpVars dvars = mlp_leaves(tape, net.mlp, false);
      Var xv = tape.constant(x);
      Var z = mlp_forward_tape(tape, enet, evars, xv);
      Var out = generate_tape(tape, net, dvars, z, schedule, opts.K, &cache);
      Var loss = tape.scalar_mul(tape.squared_error(out, xv), 1.0 / static_cast<double>(b));

      const double lval = tape.val(loss).v[0];
      if (!std::isfinite(lval)) {
        std::ostringstream os;
        os << "train_embed_net: non-finite loss at epoch " << epoch << " step " << step << " (lr=" << opts.adam.lr
           << ")";
        throw std::runtime_error(os.str());
      }
      epoch_sum += lval;

      GradientMap g = tape.backward(loss);
      std::vector<const Tensor*> grads;
      for (std::size_t l = 0; l < evars.weights.size(); ++l) {
        grads.push_back(&g.at(evars.weights[l]));
        grads.push_back(&g.at(evars.biases[l]));
      }
      if (opts.lr_decay) {
        const double frac = static_cast<double>(global_step) / static_cast<double>(total_steps);
        adam.hp.lr = base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
      }
      ++global_step;
      adam_step(params, grads, adam);
    }
    report.epoch_loss.push_back(epoch_sum / steps_per_epoch);
  }
  report.final_loss = report.epoch_loss.back();
  if (params_hash(net.mlp) != frozen) throw std::runtime_error("train_embed_net: generator parameters changed");
  return report;
}

std::vector<RefineResult> refine_seeds_gd(const DenoiserNet& net, const NoiseSchedule& schedule, const Tensor& seeds,
                                          const Tensor& targets, int steps, double lr, int K) {
  const int n = seeds.rows();
  const int d = seeds.cols();
  if (!seeds.same_shape(targets)) throw_shape_error("refine_seeds_gd", seeds, targets);

  const Tensor out0 = generate_batch(eps_from_net(net), schedule, seeds, K);

  std::vector<RefineResult> results(static_cast<std::size_t>(n));
  for (int lo = 0; lo < n; lo += kMaxRowsPerTape) {
    const int hi = std::min(n, lo + kMaxRowsPerTape);
    GdBlockResult blk =
        descend_seeds(net, schedule, gather_rows(seeds, lo, hi), gather_rows(targets, lo, hi), steps, lr, K);
    for (int i = lo; i < hi; ++i) {
      RefineResult& res = results[static_cast<std::size_t>(i)];
      res.seed = Tensor({1, d});
      for (int j = 0; j < d; ++j) res.seed.at(0, j) = blk.seeds.at(i - lo, j);
      double before = 0.0;
      for (int j = 0; j < d; ++j) {
        const double e = out0.at(i, j) - targets.at(i, j);
        before += e * e;
      }
      res.error_before = before;
      res.error_after = blk.errors[static_cast<std::size_t>(i - lo)];
    }
  }
  return results;
}

RefineResult refine_seed_gd(const DenoiserNet& net, const NoiseSchedule& schedule, const std::vector<double>& seed,
                            const std::vector<double>& target, int steps, double lr, int K) {
  const int d = net.dim;
  if (seed.size() != static_cast<std::size_t>(d) || target.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("refine_seed_gd: dimension mismatch");
  }
  Tensor init({1, d});
  Tensor tgt({1, d});
  for (int j = 0; j < d; ++j) {
    init.at(0, j) = seed[static_cast<std::size_t>(j)];
    tgt.at(0, j) = target[static_cast<std::size_t>(j)];
  }
  return refine_seeds_gd(net, schedule, init, tgt, steps, lr, K)[0];
}

double DensityResult::eval(const std::vector<double>& point) const {
  const int m = outputs.rows();
  const int d = outputs.cols();
  if (point.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("density eval: dimension mismatch");
  const double h2 = bandwidth * bandwidth;
  const double kconst = 1.0 / std::pow(2.0 * std::numbers::pi * h2, static_cast<double>(d) / 2.0);
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double e = outputs.at(i, j) - point[static_cast<std::size_t>(j)];
      sq += e * e;
    }
    s += std::exp(-sq / (2.0 * h2));
  }
  return (s / m) * kconst / norm;
}

DensityResult pushforward_density(const DenoiserNet& net, const NoiseSchedule& schedule, const GridSpec& grid, int M,
                                  double bandwidth, int K, std::uint64_t rng_seed, int workers) {
  if (M < 1) throw std::invalid_argument("pushforward_density: M must be >= 1");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("pushforward_density: bandwidth must be positive");
  const int d = net.dim;
  if (grid.bounds.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("pushforward_density: grid dimension mismatch");
  }

  RngStream rng(rng_seed, "density.seeds");
  Tensor seeds({M, d});
  for (double& e : seeds.v) e = rng.gaussian();

  DensityResult res;
  res.grid = gen_grid(grid.bounds, grid.resolution);
  res.outputs = generate_batch(eps_from_net(net), schedule, seeds, K, workers);
  res.bandwidth = bandwidth;

  res.cell_area = 1.0;
  for (const auto& [lo, hi] : grid.bounds) res.cell_area *= (hi - lo) / (grid.resolution - 1);

  const int cells = res.grid.size();
  const double h2 = bandwidth * bandwidth;
  const double kconst = 1.0 / std::pow(2.0 * std::numbers::pi * h2, static_cast<double>(d) / 2.0);
  res.density.assign(static_cast<std::size_t>(cells), 0.0);
  for (int c = 0; c < cells; ++c) {
    double s = 0.0;
    for (int i = 0; i < M; ++i) {
      double sq = 0.0;
      for (int j = 0; j < d; ++j) {
        const double e = res.outputs.at(i, j) - res.grid.points.at(c, j);
        sq += e * e;
      }
      s += std::exp(-sq / (2.0 * h2));
    }
    res.density[static_cast<std::size_t>(c)] = (s / M) * kconst;
  }

  double mass = 0.0;
  for (double e : res.density) mass += e * res.cell_area;
  if (!(mass > 0.0)) throw std::runtime_error("pushforward_density: zero mass on grid");
  res.norm = mass;
  for (double& e : res.density) e /= mass;
  return res;
}

UniquenessReport uniqueness_compare(const DenoiserNet& a, const DenoiserNet& b, const NoiseSchedule& schedule,
                                    const Tensor& shared_seeds, int K, std::uint64_t rng_seed, int workers) {
  const int n = shared_seeds.rows();
  if (n < 2) throw std::invalid_argument("uniqueness: need at least 2 seeds");

  UniquenessReport rep;
  rep.out_a = generate_batch(eps_from_net(a), schedule, shared_seeds, K, workers);
  rep.out_b = generate_batch(eps_from_net(b), schedule, shared_seeds, K, workers);

  RngStream rng(rng_seed, "uniqueness.pair");
  const std::vector<int> perm = rng.permutation(n);
  double dp = 0.0, dr = 0.0;
  for (int i = 0; i < n; ++i) {
    dp += std::sqrt(sq_dist_rows(rep.out_a, i, rep.out_b, i));
    dr += std::sqrt(sq_dist_rows(rep.out_a, i, rep.out_b, perm[static_cast<std::size_t>(i)]));
  }
  rep.d_pair = dp / n;
  rep.d_rand = dr / n;
  rep.ratio = rep.d_rand > 0.0 ? rep.d_pair / rep.d_rand : std::numeric_limits<double>::infinity();
  return rep;
}

UniquenessReport uniqueness_experiment(const PointSet& dataset, const NoiseSchedule& schedule, const ArchSpec& arch_a,
                                       const ArchSpec& arch_b, const Tensor& shared_seeds, const TrainOptions& topts,
                                       int K, std::uint64_t run_seed, int workers) {
  if (arch_a.widths == arch_b.widths && arch_a.init_seed == arch_b.init_seed) {
    throw std::invalid_argument("uniqueness_experiment: architectures must differ");
  }
  DenoiserNet net_a = init_net(dataset.dim(), arch_a.widths, arch_a.embed, arch_a.init_seed);
  DenoiserNet net_b = init_net(dataset.dim(), arch_b.widths, arch_b.embed, arch_b.init_seed);
  train(net_a, dataset, schedule, topts, RngStream(run_seed, "uniqueness.train", 0).next_u64());
  train(net_b, dataset, schedule, topts, RngStream(run_seed, "uniqueness.train", 1).next_u64());
  return uniqueness_compare(net_a, net_b, schedule, shared_seeds, K, run_seed, workers);
}

}  // namespace ddimlab
