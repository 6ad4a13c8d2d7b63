#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ddimlab/embedding.hpp"
#include "ddimlab/rng.hpp"

using namespace ddimlab;

namespace {

DenoiserNet tiny_net(std::uint64_t seed) { return init_net(2, {16, 16}, SinusoidalEmbedConfig{8, 1.0, 100.0}, seed); }

NoiseSchedule tiny_schedule() { return make_schedule(ScheduleKind::ContinuousCosine, 50); }

double regenerate_error(const DenoiserNet& net, const NoiseSchedule& s, const SeedCloud& cloud, int row) {
  Tensor seed({1, 2});
  seed.at(0, 0) = cloud.seeds.at(row, 0);
  seed.at(0, 1) = cloud.seeds.at(row, 1);
  const Tensor out = generate_batch(eps_from_net(net), s, seed, cloud.meta.K);
  const double dx = out.at(0, 0) - cloud.target.at(0, 0);
  const double dy = out.at(0, 1) - cloud.target.at(0, 1);
  return dx * dx + dy * dy;
}

}  // namespace

TEST_CASE("grav_weight closed forms") {
  CHECK(grav_weight({1.0, 2.0}, {1.0, 2.0}, 1.0) == 0.0);

  // 1D, sigma 1, unit distance: Gaussian density times distance
  const double expected = std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
  CHECK(grav_weight({0.0}, {1.0}, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.241971).epsilon(1e-6));

  // the peak of r * density sits at r = sigma
  for (double sigma : {0.5, 1.0, 2.0}) {
    double best_r = 0.0, best = -1.0;
    for (double r = 0.01; r < 5.0; r += 0.01) {
      const double w = grav_weight({0.0}, {r}, sigma);
      if (w > best) {
        best = w;
        best_r = r;
      }
    }
    CHECK(best_r == doctest::Approx(sigma).epsilon(0.02));
  }

  // L1 flag switches only the distance factor
  const double l2 = grav_weight({0.0, 0.0}, {3.0, 4.0}, 2.0, false);
  const double l1 = grav_weight({0.0, 0.0}, {3.0, 4.0}, 2.0, true);
  CHECK(l1 / l2 == doctest::Approx(7.0 / 5.0).epsilon(1e-12));

  CHECK_THROWS_AS(grav_weight({0.0}, {1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("grav_profile: unit integrals and branch shapes") {
  std::vector<double> r;
  for (int i = 1; i <= 600; ++i) r.push_back(i * 0.01);
  const GravProfile p = grav_profile(1.0, r);

  const auto integral = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * (r[i + 1] - r[i]);
    return s;
  };
  CHECK(integral(p.weighted) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(integral(p.gravity) == doctest::Approx(1.0).epsilon(1e-6));

  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(p.weighted[i] >= 0.0);
    CHECK(p.gravity[i] >= 0.0);
  }

  // inside the body the field grows linearly, outside it decays as 1/r^2
  CHECK(p.gravity[49] / p.gravity[24] == doctest::Approx(0.50 / 0.25).epsilon(1e-9));
  CHECK(p.gravity[399] / p.gravity[199] == doctest::Approx((2.0 * 2.0) / (4.0 * 4.0)).epsilon(1e-9));

  // weighted curve peaks at r = sigma
  std::size_t arg = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (p.weighted[i] > p.weighted[arg]) arg = i;
  }
  CHECK(r[arg] == doctest::Approx(1.0).epsilon(0.02));

  CHECK_THROWS_AS(grav_profile(1.0, {0.5, 0.4}), std::invalid_argument);
}

TEST_CASE("grav_map assignments honor tau") {
  const DenoiserNet net = tiny_net(101);
  const NoiseSchedule s = tiny_schedule();
  PointSet data = gen_blobs(32, {{-1.0, 0.0}, {1.0, 0.0}}, 0.2, 3);
  const PointSet grid = gen_grid({{-2.0, 2.0}, {-2.0, 2.0}}, 5);

  const GravMap closed = grav_map(net, s, data, grid, 10, 0.0);
  for (int a : closed.assignment) CHECK(a == -1);

  const GravMap open = grav_map(net, s, data, grid, 10, 1e9);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(open.assignment[static_cast<std::size_t>(i)] >= 0);
    CHECK(open.distance[static_cast<std::size_t>(i)] <= 1e9);
  }
  CHECK(open.outputs.size() == grid.size());
}

TEST_CASE("emb_cloud_from_grid selects by output distance") {
  const DenoiserNet net = tiny_net(103);
  const NoiseSchedule s = tiny_schedule();
  PointSet data = gen_blobs(16, {{0.0, 0.0}}, 0.3, 5);
  const PointSet grid = gen_grid({{-1.5, 1.5}, {-1.5, 1.5}}, 7);
  const GravMap map = grav_map(net, s, data, grid, 10, 0.5);

  const std::vector<double> x{map.outputs.points.at(20, 0), map.outputs.points.at(20, 1)};

  const SeedCloud none = emb_cloud_from_grid(map, {1e6, 1e6}, 0.0);
  CHECK(none.size() == 0);

  const SeedCloud all = emb_cloud_from_grid(map, x, 1e9);
  CHECK(all.size() == grid.size());

  const SeedCloud close = emb_cloud_from_grid(map, x, 1e-9);
  CHECK(close.size() >= 1);  // the exact hit at row 20 qualifies
  for (int i = 0; i < close.size(); ++i) {
    CHECK(close.recon_errors[static_cast<std::size_t>(i)] <= 1e-18);
  }
}

TEST_CASE("embed_gd: steps=0 returns the initial noise with its errors") {
  const DenoiserNet net = tiny_net(107);
  const NoiseSchedule s = tiny_schedule();
  EmbedGdOptions opts;
  opts.m = 6;
  opts.steps = 0;
  opts.K = 5;
  const SeedCloud cloud = embed_gd(net, s, {0.3, -0.4}, opts, 909, 0);

  RngStream rng(909, "embed_gd.init", 0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(cloud.seeds.at(i, j) == rng.gaussian());
  }
  for (int i = 0; i < 6; ++i) {
    CHECK(regenerate_error(net, s, cloud, i) ==
          doctest::Approx(cloud.recon_errors[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("embed_gd: lr=0 leaves seeds unchanged") {
  const DenoiserNet net = tiny_net(109);
  const NoiseSchedule s = tiny_schedule();
  EmbedGdOptions opts;
  opts.m = 4;
  opts.steps = 10;
  opts.lr = 0.0;
  opts.K = 5;
  const SeedCloud cloud = embed_gd(net, s, {0.0, 0.0}, opts, 910, 0);
  RngStream rng(910, "embed_gd.init", 0);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(cloud.seeds.at(i, j) == rng.gaussian());
  }
}

TEST_CASE("embed_gd: best-iterate errors never exceed the initial error and the net stays frozen") {
  const DenoiserNet net = tiny_net(113);
  const std::uint64_t before = params_hash(net.mlp);
  const NoiseSchedule s = tiny_schedule();

  EmbedGdOptions zero;
  zero.m = 5;
  zero.steps = 0;
  zero.K = 5;
  const SeedCloud initial = embed_gd(net, s, {0.5, 0.5}, zero, 911, 0);

  EmbedGdOptions opts;
  opts.m = 5;
  opts.steps = 40;
  opts.lr = 0.05;
  opts.K = 5;
  const SeedCloud cloud = embed_gd(net, s, {0.5, 0.5}, opts, 911, 0);
  CHECK(params_hash(net.mlp) == before);

  for (int i = 0; i < 5; ++i) {
    CHECK(cloud.recon_errors[static_cast<std::size_t>(i)] <=
          initial.recon_errors[static_cast<std::size_t>(i)] + 1e-15);
    CHECK(regenerate_error(net, s, cloud, i) ==
          doctest::Approx(cloud.recon_errors[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("embed_gd_batch matches one-at-a-time runs bitwise") {
  const DenoiserNet net = tiny_net(127);
  const NoiseSchedule s = tiny_schedule();
  EmbedGdOptions opts;
  opts.m = 3;
  opts.steps = 15;
  opts.lr = 0.05;
  opts.K = 5;

  const Tensor targets = Tensor::from({2, 2}, {0.4, 0.1, -0.2, 0.6});
  const std::vector<SeedCloud> fused = embed_gd_batch(net, s, targets, opts, 33, 1);
  for (int i = 0; i < 2; ++i) {
    const SeedCloud solo =
        embed_gd(net, s, {targets.at(i, 0), targets.at(i, 1)}, opts, 33, static_cast<std::uint64_t>(i));
    for (int r = 0; r < 3; ++r) {
      CHECK(fused[static_cast<std::size_t>(i)].seeds.at(r, 0) == solo.seeds.at(r, 0));
      CHECK(fused[static_cast<std::size_t>(i)].seeds.at(r, 1) == solo.seeds.at(r, 1));
      CHECK(fused[static_cast<std::size_t>(i)].recon_errors[static_cast<std::size_t>(r)] ==
            solo.recon_errors[static_cast<std::size_t>(r)]);
    }
  }
}

TEST_CASE("convex_combos: weights on the simplex, degenerate cloud reproduces its seed") {
  const DenoiserNet net = tiny_net(131);
  const NoiseSchedule s = tiny_schedule();

  SeedCloud cloud;
  cloud.target = Tensor::from({1, 2}, {0.2, -0.1});
  cloud.seeds = Tensor::from({3, 2}, {0.7, -0.3, 0.7, -0.3, 0.7, -0.3});  // identical seeds
  cloud.recon_errors = {0.0, 0.0, 0.0};
  cloud.aborted = {false, false, false};
  cloud.meta.K = 5;

  const ComboResult res = convex_combos(net, s, cloud, 8, 77);
  for (int c = 0; c < 8; ++c) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      CHECK(res.weights.at(c, k) >= 0.0);
      sum += res.weights.at(c, k);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.combo_seeds.at(c, 0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(res.combo_seeds.at(c, 1) == doctest::Approx(-0.3).epsilon(1e-12));
  }
  for (int c = 1; c < 8; ++c) {
    CHECK(res.recon_errors[static_cast<std::size_t>(c)] == doctest::Approx(res.recon_errors[0]).epsilon(1e-9));
  }

  const ComboResult sres = convex_combos(net, s, cloud, 16, 78, true);
  bool any_negative = false;
  for (int c = 0; c < 16; ++c) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      sum += sres.weights.at(c, k);
      any_negative = any_negative || sres.weights.at(c, k) < 0.0;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(any_negative);

  SeedCloud tiny;
  tiny.seeds = Tensor::from({1, 2}, {0.0, 0.0});
  CHECK_THROWS_AS(convex_combos(net, s, tiny, 4, 1), std::invalid_argument);
}

TEST_CASE("progressive_mean: flat for identical seeds, k=1 equals the first seed") {
  const DenoiserNet net = tiny_net(137);
  const NoiseSchedule s = tiny_schedule();

  SeedCloud cloud;
  cloud.target = Tensor::from({1, 2}, {0.1, 0.1});
  cloud.seeds = Tensor::from({4, 2}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  cloud.recon_errors = {0, 0, 0, 0};
  cloud.aborted = {false, false, false, false};
  cloud.meta.K = 5;

  const std::vector<double> flat = progressive_mean(net, s, cloud, {1, 2, 3, 4});
  for (double e : flat) CHECK(e == doctest::Approx(flat[0]).epsilon(1e-12));
  CHECK(flat[0] == doctest::Approx(regenerate_error(net, s, cloud, 0)).epsilon(1e-12));

  CHECK_THROWS_AS(progressive_mean(net, s, cloud, {0}), std::invalid_argument);
  CHECK_THROWS_AS(progressive_mean(net, s, cloud, {5}), std::invalid_argument);
  CHECK_THROWS_AS(progressive_mean(net, s, cloud, {3, 2}), std::invalid_argument);
}

TEST_CASE("pca: closed form, rotation equivariance, reconstruction") {
  const Tensor pair = Tensor::from({2, 2}, {1.0, 0.0, -1.0, 0.0});
  const PcaResult p = pca_points(pair);
  CHECK(p.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p.eigenvalues[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(p.components.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.components.at(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(p.components.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));

  RngStream rng(139, "test.pca");
  const int m = 400;
  Tensor cloud({m, 2});
  for (int i = 0; i < m; ++i) {
    cloud.at(i, 0) = 3.0 * rng.gaussian();
    cloud.at(i, 1) = 0.5 * rng.gaussian();
  }
  const double c45 = std::cos(std::numbers::pi / 4.0), s45 = std::sin(std::numbers::pi / 4.0);
  Tensor rotated({m, 2});
  for (int i = 0; i < m; ++i) {
    rotated.at(i, 0) = c45 * cloud.at(i, 0) - s45 * cloud.at(i, 1);
    rotated.at(i, 1) = s45 * cloud.at(i, 0) + c45 * cloud.at(i, 1);
  }
  const PcaResult a = pca_points(cloud);
  const PcaResult b = pca_points(rotated);
  CHECK(a.eigenvalues[0] == doctest::Approx(b.eigenvalues[0]).epsilon(1e-10));
  CHECK(a.eigenvalues[1] == doctest::Approx(b.eigenvalues[1]).epsilon(1e-10));
  const double rx = c45 * a.components.at(0, 0) - s45 * a.components.at(0, 1);
  const double ry = s45 * a.components.at(0, 0) + c45 * a.components.at(0, 1);
  const double dot = rx * b.components.at(0, 0) + ry * b.components.at(0, 1);
  CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-10));

  for (const PcaResult* r : {&a, &b}) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        double d = 0.0;
        for (int k = 0; k < 2; ++k) d += r->components.at(i, k) * r->components.at(j, k);
        CHECK(d == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-10));
      }
    }
  }

  // C == V^T diag(lambda) V with components stored as rows
  double cov[2][2] = {{0, 0}, {0, 0}};
  for (int i = 0; i < m; ++i) {
    const double ex = cloud.at(i, 0) - a.mean[0];
    const double ey = cloud.at(i, 1) - a.mean[1];
    cov[0][0] += ex * ex;
    cov[0][1] += ex * ey;
    cov[1][0] += ey * ex;
    cov[1][1] += ey * ey;
  }
  double fro = 0.0, norm = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      cov[i][j] /= (m - 1);
      double rec = 0.0;
      for (int k = 0; k < 2; ++k) {
        rec += a.components.at(k, i) * a.eigenvalues[static_cast<std::size_t>(k)] * a.components.at(k, j);
      }
      fro += (cov[i][j] - rec) * (cov[i][j] - rec);
      norm += cov[i][j] * cov[i][j];
    }
  }
  CHECK(std::sqrt(fro / norm) < 1e-8);
}

TEST_CASE("traverse_component: factor 0 gives the mean seed's output") {
  const DenoiserNet net = tiny_net(149);
  const NoiseSchedule s = tiny_schedule();

  RngStream rng(151, "test.traverse");
  SeedCloud cloud;
  cloud.seeds = Tensor({16, 2});
  for (double& e : cloud.seeds.v) e = rng.gaussian();
  cloud.target = Tensor::from({1, 2}, {0.0, 0.0});
  cloud.recon_errors.assign(16, 0.0);
  cloud.aborted.assign(16, false);
  cloud.meta.K = 5;

  const PcaResult pca = pca_cloud(cloud);
  const Tensor outs = traverse_component(net, s, cloud, pca, 0, {-1.5, 0.0, 1.5}, 5);

  Tensor mean_seed({1, 2});
  mean_seed.at(0, 0) = pca.mean[0];
  mean_seed.at(0, 1) = pca.mean[1];
  const Tensor mean_out = generate_batch(eps_from_net(net), s, mean_seed, 5);
  CHECK(outs.at(1, 0) == doctest::Approx(mean_out.at(0, 0)).epsilon(1e-12));
  CHECK(outs.at(1, 1) == doctest::Approx(mean_out.at(0, 1)).epsilon(1e-12));

  CHECK_THROWS_AS(traverse_component(net, s, cloud, pca, 2, {1.0}, 5), std::out_of_range);
}

TEST_CASE("train_embed_net: lr=0 freezes the inverter, losses non-negative, generator untouched") {
  const DenoiserNet net = tiny_net(157);
  const NoiseSchedule s = tiny_schedule();
  PointSet data = gen_two_moons(64, 0.05, 11);
  auto [norm, tf] = normalize(data);

  Mlp enet = init_embed_net(2, {8, 8}, 5);
  const std::uint64_t before = params_hash(enet);
  EmbedNetTrainOptions opts;
  opts.epochs = 2;
  opts.batch_size = 8;
  opts.adam.lr = 0.0;
  opts.K = 5;
  const TrainReport rep = train_embed_net(enet, net, s, norm, opts, 13);
  CHECK(params_hash(enet) == before);
  for (double l : rep.epoch_loss) CHECK(l >= 0.0);

  opts.adam.lr = 1e80;
  opts.epochs = 10;
  CHECK_THROWS_AS(train_embed_net(enet, net, s, norm, opts, 13), std::runtime_error);
}

TEST_CASE("refine_seed_gd: steps=0 is a no-op and refinement never hurts") {
  const DenoiserNet net = tiny_net(163);
  const NoiseSchedule s = tiny_schedule();

  const RefineResult same = refine_seed_gd(net, s, {0.5, -0.5}, {0.2, 0.2}, 0, 0.05, 5);
  CHECK(same.error_after == doctest::Approx(same.error_before).epsilon(1e-15));

  const RefineResult ref = refine_seed_gd(net, s, {0.5, -0.5}, {0.2, 0.2}, 30, 0.05, 5);
  CHECK(ref.error_after <= ref.error_before + 1e-15);
}

TEST_CASE("pushforward_density: single bump, unit mass, consistent eval") {
  const DenoiserNet net = tiny_net(167);
  const NoiseSchedule s = tiny_schedule();
  // an untrained generator throws outputs far out, so the viewport is wide
  GridSpec grid;
  grid.bounds = {{-64.0, 64.0}, {-64.0, 64.0}};
  grid.resolution = 65;

  const DensityResult one = pushforward_density(net, s, grid, 1, 2.0, 5, 71);
  double mass = 0.0, peak = -1.0;
  int arg = -1;
  for (int i = 0; i < one.grid.size(); ++i) {
    CHECK(one.density[static_cast<std::size_t>(i)] >= 0.0);
    mass += one.density[static_cast<std::size_t>(i)] * one.cell_area;
    if (one.density[static_cast<std::size_t>(i)] > peak) {
      peak = one.density[static_cast<std::size_t>(i)];
      arg = i;
    }
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

  double best = 1e300;
  int nearest = -1;
  for (int i = 0; i < one.grid.size(); ++i) {
    const double dx = one.grid.points.at(i, 0) - one.outputs.at(0, 0);
    const double dy = one.grid.points.at(i, 1) - one.outputs.at(0, 1);
    if (dx * dx + dy * dy < best) {
      best = dx * dx + dy * dy;
      nearest = i;
    }
  }
  CHECK(arg == nearest);

  const std::vector<double> probe{one.grid.points.at(2100, 0), one.grid.points.at(2100, 1)};
  CHECK(one.eval(probe) == doctest::Approx(one.density[2100]).epsilon(1e-12));
}

TEST_CASE("uniqueness_compare: identical nets pair exactly") {
  const DenoiserNet a = tiny_net(173);
  const DenoiserNet b = tiny_net(173);
  const NoiseSchedule s = tiny_schedule();
  RngStream rng(179, "test.uniq");
  Tensor seeds({32, 2});
  for (double& e : seeds.v) e = rng.gaussian();

  const UniquenessReport rep = uniqueness_compare(a, b, s, seeds, 10, 5);
  CHECK(rep.d_pair == 0.0);
  CHECK(rep.d_rand > 0.0);

  const DenoiserNet c = tiny_net(181);
  const UniquenessReport rep2 = uniqueness_compare(a, c, s, seeds, 10, 5);
  CHECK(rep2.d_pair > 0.0);
  CHECK(std::isfinite(rep2.ratio));
}
