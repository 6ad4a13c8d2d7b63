#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <cstring>

#include "ddimlab/diffusion.hpp"
#include "ddimlab/rng.hpp"

using namespace ddimlab;

namespace {

/// Denoiser oracle that returns the exact noise used to diffuse; with it the
/// whole reverse algebra becomes closed-form.
EpsFn oracle_eps(const Tensor& eps) {
  return [eps](const Tensor& x, const std::vector<double>&) {
    Tensor out = eps;
    REQUIRE(out.rows() == x.rows());
    return out;
  };
}

DenoiserNet tiny_net(std::uint64_t seed) { return init_net(2, {16, 16}, SinusoidalEmbedConfig{8, 1.0, 100.0}, seed); }

PointSet tiny_dataset() {
  PointSet ps = gen_two_moons(64, 0.05, 555);
  auto [norm, tf] = normalize(ps);
  return norm;
}

}  // namespace

TEST_CASE("diffuse follows the interpolation exactly") {
  const Tensor x0 = Tensor::from({1, 2}, {1.0, 0.0});
  const Tensor eps = Tensor::from({1, 2}, {0.0, 1.0});

  const Tensor same = diffuse_alpha(x0, {1.0}, Tensor::zeros_like(x0));
  CHECK(same.at(0, 0) == 1.0);
  CHECK(same.at(0, 1) == 0.0);

  const Tensor mid = diffuse_alpha(x0, {0.25}, eps);
  CHECK(mid.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mid.at(0, 1) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));

  const Tensor pure = diffuse_alpha(x0, {0.0}, eps);
  CHECK(pure.at(0, 0) == 0.0);
  CHECK(pure.at(0, 1) == 1.0);

  CHECK_THROWS_AS(diffuse_alpha(x0, {1.5}, eps), std::out_of_range);
  CHECK_THROWS_AS(diffuse_alpha(x0, {0.5, 0.5}, eps), std::invalid_argument);
}

TEST_CASE("diffuse through the schedule table") {
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 100);
  const Tensor x0 = Tensor::from({2, 2}, {1.0, -1.0, 0.5, 0.25});
  RngStream rng(8, "test.diffuse");
  Tensor eps({2, 2});
  for (double& e : eps.v) e = rng.gaussian();
  const Tensor xt = diffuse(x0, s, {30, 70}, eps);
  for (int i = 0; i < 2; ++i) {
    const auto [sr, nr] = s.rates_at(i == 0 ? 30 : 70);
    for (int j = 0; j < 2; ++j) {
      CHECK(xt.at(i, j) == doctest::Approx(sr * x0.at(i, j) + nr * eps.at(i, j)).epsilon(1e-15));
    }
  }
}

TEST_CASE("estimate_x0 inverts the diffusion under the true-noise oracle") {
  RngStream rng(4, "test.estimate");
  Tensor x0({5, 2});
  Tensor eps({5, 2});
  for (double& e : x0.v) e = rng.gaussian();
  for (double& e : eps.v) e = rng.gaussian();

  for (double alpha : {1e-4, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0}) {
    const Tensor xt = diffuse_alpha(x0, std::vector<double>(5, alpha), eps);
    const Tensor rec = estimate_x0(oracle_eps(eps), xt, alpha);
    for (std::size_t i = 0; i < rec.v.size(); ++i) {
      CHECK(rec.v[i] == doctest::Approx(x0.v[i]).epsilon(1e-9));
    }
  }

  const Tensor xt = diffuse_alpha(x0, std::vector<double>(5, 1.0), eps);
  const Tensor rec = estimate_x0(oracle_eps(eps), xt, 1.0);
  for (std::size_t i = 0; i < rec.v.size(); ++i) CHECK(rec.v[i] == doctest::Approx(x0.v[i]).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_x0(oracle_eps(eps), xt, 0.0), std::invalid_argument);
}

TEST_CASE("ddim_step closed forms") {
  RngStream rng(6, "test.ddim");
  Tensor x0({3, 2});
  Tensor eps({3, 2});
  for (double& e : x0.v) e = rng.gaussian();
  for (double& e : eps.v) e = rng.gaussian();

  const double at = 0.36;
  const Tensor xt = diffuse_alpha(x0, std::vector<double>(3, at), eps);

  // closing step: alpha_prev = 1 returns the denoised estimate
  const Tensor closed = ddim_step(oracle_eps(eps), xt, at, 1.0);
  for (std::size_t i = 0; i < closed.v.size(); ++i) CHECK(closed.v[i] == doctest::Approx(x0.v[i]).epsilon(1e-12));

  // stationary step: alpha_prev = alpha_t returns x_t
  const Tensor same = ddim_step(oracle_eps(eps), xt, at, at);
  for (std::size_t i = 0; i < same.v.size(); ++i) CHECK(same.v[i] == doctest::Approx(xt.v[i]).epsilon(1e-12));

  // oracle closure: the chain walks the noiseless interpolation exactly
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 50);
  Tensor x = diffuse_alpha(x0, std::vector<double>(3, s.alpha_at(50)), eps);
  for (int t = 50; t >= 1; --t) {
    x = ddim_step(oracle_eps(eps), x, s.alpha_at(t), s.alpha_at(t - 1));
    const Tensor expect = diffuse_alpha(x0, std::vector<double>(3, s.alpha_at(t - 1)), eps);
    for (std::size_t i = 0; i < x.v.size(); ++i) CHECK(x.v[i] == doctest::Approx(expect.v[i]).epsilon(1e-9));
  }

  CHECK_THROWS_AS(ddim_step(oracle_eps(eps), xt, 0.8, 0.5), std::invalid_argument);
}

TEST_CASE("ddpm chain with zeroed noise matches the ddim chain") {
  const DenoiserNet net = tiny_net(19);
  const NoiseSchedule s = make_schedule(ScheduleKind::Linear, 10);
  const EpsFn eps = eps_from_net(net);

  RngStream rng(23, "test.ddpm");
  Tensor x({4, 2});
  for (double& e : x.v) e = rng.gaussian();

  Tensor via_ddpm = x;
  Tensor via_ddim = x;
  const Tensor zero = Tensor::zeros_like(x);
  for (int t = 10; t >= 1; --t) {
    // sigma forced to zero in the general step; z zeroed
    via_ddpm = ddim_general_step(eps, via_ddpm, s.alpha_at(t), s.alpha_at(t - 1), 0.0, zero);
    via_ddim = ddim_step(eps, via_ddim, s.alpha_at(t), s.alpha_at(t - 1));
  }
  for (std::size_t i = 0; i < via_ddim.v.size(); ++i) {
    CHECK(via_ddpm.v[i] == doctest::Approx(via_ddim.v[i]).epsilon(1e-9));
  }
}

TEST_CASE("ddpm_step: t=1 is deterministic and noisy steps reproduce bitwise") {
  const DenoiserNet net = tiny_net(29);
  const NoiseSchedule s = make_schedule(ScheduleKind::Linear, 10);
  const EpsFn eps = eps_from_net(net);

  RngStream rng(31, "test.ddpm2");
  Tensor x({2, 2});
  for (double& e : x.v) e = rng.gaussian();

  Tensor junk({2, 2});
  for (double& e : junk.v) e = rng.gaussian();
  const Tensor a = ddpm_step(eps, x, 1, s, junk);
  const Tensor b = ddpm_step(eps, x, 1, s, Tensor::zeros_like(x));
  CHECK(std::memcmp(a.data(), b.data(), a.v.size() * sizeof(double)) == 0);

  const auto run_chain = [&](std::uint64_t zseed) {
    RngStream zs(zseed, "test.zstream");
    Tensor cur = x;
    for (int t = 10; t >= 1; --t) {
      Tensor z({2, 2});
      for (double& e : z.v) e = zs.gaussian();
      cur = ddpm_step(eps, cur, t, s, z);
    }
    return cur;
  };
  const Tensor c1 = run_chain(7);
  const Tensor c2 = run_chain(7);
  CHECK(std::memcmp(c1.data(), c2.data(), c1.v.size() * sizeof(double)) == 0);
  const Tensor c3 = run_chain(8);
  CHECK(std::memcmp(c1.data(), c3.data(), c1.v.size() * sizeof(double)) != 0);

  CHECK_THROWS_AS(ddpm_step(eps, x, 0, s, junk), std::out_of_range);
}

TEST_CASE("generate: determinism, unrolled K=2, trajectory contract") {
  const DenoiserNet net = tiny_net(37);
  const DenoiserNet twin = tiny_net(37);
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 100);
  const EpsFn eps = eps_from_net(net);

  const Tensor seed = Tensor::from({1, 2}, {0.4, -1.2});
  auto [out1, traj1] = generate(eps, s, seed, 25);
  auto [out2, traj2] = generate(eps_from_net(twin), s, seed, 25);
  CHECK(std::memcmp(out1.data(), out2.data(), out1.v.size() * sizeof(double)) == 0);

  CHECK(traj1.t.front() == 100);
  CHECK(traj1.t.back() == 0);
  for (std::size_t i = 1; i < traj1.t.size(); ++i) CHECK(traj1.t[i] < traj1.t[i - 1]);
  CHECK(traj1.x.front().at(0, 0) == seed.at(0, 0));

  // K=2 equals one estimate at t=T pushed to the midpoint then closed
  auto [k2, traj] = generate(eps, s, seed, 2);
  Tensor manual = seed;
  manual = ddim_step(eps, manual, s.alpha_at(100), s.alpha_at(50));
  manual = ddim_step(eps, manual, s.alpha_at(50), s.alpha_at(0));
  CHECK(std::memcmp(k2.data(), manual.data(), k2.v.size() * sizeof(double)) == 0);
}

TEST_CASE("generate_batch: rows are independent and worker-count invariant") {
  const DenoiserNet net = tiny_net(41);
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 100);
  const EpsFn eps = eps_from_net(net);

  RngStream rng(43, "test.batch");
  Tensor seeds({6, 2});
  for (double& e : seeds.v) e = rng.gaussian();

  const Tensor serial = generate_batch(eps, s, seeds, 10, 1);
  const Tensor threaded = generate_batch(eps, s, seeds, 10, 3);
  CHECK(std::memcmp(serial.data(), threaded.data(), serial.v.size() * sizeof(double)) == 0);

  // batch of one equals the single generate
  auto [single, traj] = generate(eps, s, Tensor::from({1, 2}, {seeds.at(2, 0), seeds.at(2, 1)}), 10);
  CHECK(single.at(0, 0) == serial.at(2, 0));
  CHECK(single.at(0, 1) == serial.at(2, 1));

  // permuting seed rows permutes outputs
  Tensor reversed({6, 2});
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 2; ++j) reversed.at(i, j) = seeds.at(5 - i, j);
  }
  const Tensor rev_out = generate_batch(eps, s, reversed, 10, 1);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(rev_out.at(i, j) == serial.at(5 - i, j));
  }
}

TEST_CASE("generate_tape agrees with the plain chain and is differentiable") {
  const DenoiserNet net = tiny_net(47);
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 100);

  RngStream rng(49, "test.tapechain");
  Tensor z({2, 2});
  for (double& e : z.v) e = rng.gaussian();

  Tape tape;
  MlpVars vars = mlp_leaves(tape, net.mlp, false);
  Var zv = tape.leaf(z, true);
  Var out = generate_tape(tape, net, vars, zv, s, 10);
  const Tensor plain = generate_batch(eps_from_net(net), s, z, 10, 1);
  for (std::size_t i = 0; i < plain.v.size(); ++i) {
    CHECK(tape.val(out).v[i] == doctest::Approx(plain.v[i]).epsilon(1e-12));
  }

  const auto f = [&](Tape& t, Var seed) {
    MlpVars frozen = mlp_leaves(t, net.mlp, false);
    Var o = generate_tape(t, net, frozen, seed, s, 5);
    return t.sum(t.mul(o, o));
  };
  CHECK(grad_check(f, z, 1e-5) < 1e-4);
}

TEST_CASE("train: lr=0 leaves parameters fixed; identical runs are bitwise equal") {
  const PointSet ds = tiny_dataset();
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 1000);

  DenoiserNet frozen = tiny_net(51);
  const std::uint64_t before = params_hash(frozen.mlp);
  TrainOptions zero;
  zero.epochs = 1;
  zero.batch_size = 8;
  zero.adam.lr = 0.0;
  train(frozen, ds, s, zero, 777);
  CHECK(params_hash(frozen.mlp) == before);

  TrainOptions opts;
  opts.epochs = 2;
  opts.batch_size = 16;
  DenoiserNet a = tiny_net(53);
  DenoiserNet b = tiny_net(53);
  const TrainReport ra = train(a, ds, s, opts, 999);
  const TrainReport rb = train(b, ds, s, opts, 999);
  CHECK(params_hash(a.mlp) == params_hash(b.mlp));
  CHECK(ra.final_loss == rb.final_loss);
  CHECK(ra.epoch_loss.size() == 2);
  for (double l : ra.epoch_loss) {
    CHECK(l >= 0.0);
    CHECK(std::isfinite(l));
  }

  CHECK_THROWS_AS(train(a, ds, s, TrainOptions{0, 8, AdamParams{}, true}, 1), std::invalid_argument);
}

TEST_CASE("train: runaway learning rate aborts with diagnostics") {
  const PointSet ds = tiny_dataset();
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 1000);
  DenoiserNet net = tiny_net(57);
  TrainOptions opts;
  opts.epochs = 50;
  opts.batch_size = 8;
  opts.adam.lr = 1e80;
  CHECK_THROWS_WITH_AS(train(net, ds, s, opts, 3), doctest::Contains("non-finite"), std::runtime_error);
}

TEST_CASE("diffusion marginals match the schedule within Monte-Carlo error") {
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 1000);
  const int n = 100000;
  RngStream rng(61, "test.marginals");
  // constant x0 isolates the coefficients of Eq-style interpolation
  Tensor x0({n, 1});
  for (double& e : x0.v) e = 0.7;
  Tensor eps({n, 1});
  for (double& e : eps.v) e = rng.gaussian();

  const int t = 600;
  const auto [sr, nr] = s.rates_at(t);
  const Tensor xt = diffuse(x0, s, std::vector<int>(n, t), eps);
  double mean = 0.0;
  for (double e : xt.v) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : xt.v) var += (e - mean) * (e - mean);
  var /= n;

  const double se_mean = nr / std::sqrt(static_cast<double>(n));
  const double se_var = nr * nr * std::sqrt(2.0 / n);
  CHECK(std::abs(mean - sr * 0.7) < 3.0 * se_mean);
  CHECK(std::abs(var - nr * nr) < 3.0 * se_var);
}
