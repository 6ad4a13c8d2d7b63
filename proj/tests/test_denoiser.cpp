#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <cstring>

#include "ddimlab/denoiser.hpp"
#include "ddimlab/rng.hpp"
#include "ddimlab/tape.hpp"

using namespace ddimlab;

TEST_CASE("sinusoidal embedding closed forms") {
  const SinusoidalEmbedConfig cfg{8, 1.0, 1000.0};
  const std::vector<double> at_zero = sinusoidal_embed(cfg, 0.0);
  for (int k = 0; k < 4; ++k) {
    CHECK(at_zero[static_cast<std::size_t>(k)] == 0.0);
    CHECK(at_zero[static_cast<std::size_t>(4 + k)] == 1.0);
  }

  const SinusoidalEmbedConfig single{2, 1.0, 1.0};
  const std::vector<double> quarter = sinusoidal_embed(single, 0.25);
  CHECK(quarter[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quarter[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

  RngStream rng(2, "test.embed");
  for (int trial = 0; trial < 64; ++trial) {
    const std::vector<double> e = sinusoidal_embed(cfg, rng.uniform());
    for (double v : e) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK_THROWS_AS(sinusoidal_embed(cfg, -0.1), std::out_of_range);
  CHECK_THROWS_AS(sinusoidal_embed(cfg, 1.1), std::out_of_range);
  CHECK_THROWS_AS(sinusoidal_embed(SinusoidalEmbedConfig{3, 1.0, 2.0}, 0.5), std::invalid_argument);
}

TEST_CASE("init is deterministic with zero biases and fan-in scaled weights") {
  const DenoiserNet a = init_net(2, {128, 128}, SinusoidalEmbedConfig{32, 1.0, 1000.0}, 42);
  const DenoiserNet b = init_net(2, {128, 128}, SinusoidalEmbedConfig{32, 1.0, 1000.0}, 42);
  CHECK(params_hash(a.mlp) == params_hash(b.mlp));

  for (const Tensor& bias : a.mlp.biases) {
    for (double e : bias.v) CHECK(e == 0.0);
  }

  // the 128-wide hidden layer: empirical std within 20% of 1/sqrt(fan_in)
  const Tensor& w = a.mlp.weights[1];
  REQUIRE(w.shape[0] == 128);
  double sum = 0.0, sq = 0.0;
  for (double e : w.v) {
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(w.numel());
  const double std_emp = std::sqrt(sq / n - (sum / n) * (sum / n));
  const double target = 1.0 / std::sqrt(128.0);
  CHECK(std_emp > 0.8 * target);
  CHECK(std_emp < 1.2 * target);
}

TEST_CASE("zero-parameter net predicts zero") {
  DenoiserNet net = init_net(2, {8, 8}, SinusoidalEmbedConfig{4, 1.0, 10.0}, 1);
  for (Tensor* p : net.mlp.params()) {
    for (double& e : p->v) e = 0.0;
  }
  const Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  const Tensor out = predict_eps(net, x, {0.5, 0.5, 0.5});
  for (double e : out.v) CHECK(e == 0.0);
}

TEST_CASE("per-row purity: duplicated rows and permutations") {
  const DenoiserNet net = init_net(2, {16, 16}, SinusoidalEmbedConfig{8, 1.0, 100.0}, 3);
  const Tensor dup = Tensor::from({2, 2}, {0.3, -0.7, 0.3, -0.7});
  const Tensor out = predict_eps(net, dup, {0.4, 0.4});
  CHECK(out.at(0, 0) == out.at(1, 0));
  CHECK(out.at(0, 1) == out.at(1, 1));

  const Tensor batch = Tensor::from({3, 2}, {1, 0, 0, 1, -1, 0.5});
  const Tensor fwd = predict_eps(net, batch, {0.2, 0.5, 0.9});
  const Tensor swapped = Tensor::from({3, 2}, {-1, 0.5, 0, 1, 1, 0});
  const Tensor bwd = predict_eps(net, swapped, {0.9, 0.5, 0.2});
  for (int j = 0; j < 2; ++j) {
    CHECK(fwd.at(0, j) == bwd.at(2, j));
    CHECK(fwd.at(1, j) == bwd.at(1, j));
    CHECK(fwd.at(2, j) == bwd.at(0, j));
  }
}

TEST_CASE("predict_eps input gradient matches finite differences") {
  const DenoiserNet net = init_net(2, {6, 5}, SinusoidalEmbedConfig{4, 1.0, 50.0}, 11);
  RngStream rng(12, "test.denoiser.grad");
  Tensor x({3, 2});
  for (double& e : x.v) e = rng.gaussian();
  const std::vector<double> alpha{0.3, 0.6, 0.85};

  const auto f = [&](Tape& tape, Var xv) {
    MlpVars frozen = mlp_leaves(tape, net.mlp, false);
    Var eps = predict_eps_tape(tape, net, frozen, xv, alpha);
    return tape.sum(tape.mul(eps, eps));
  };
  CHECK(grad_check(f, x, 1e-5) < 1e-4);
}

TEST_CASE("training-loss parameter gradients match central differences") {
  RngStream rng(21, "test.denoiser.full");
  const DenoiserNet net = init_net(2, {6, 5}, SinusoidalEmbedConfig{4, 1.0, 50.0}, 13);
  Tensor x({4, 2});
  Tensor target({4, 2});
  for (double& e : x.v) e = rng.gaussian();
  for (double& e : target.v) e = rng.gaussian();
  const std::vector<double> alpha{0.15, 0.4, 0.65, 0.9};

  Tape tape;
  MlpVars vars = mlp_leaves(tape, net.mlp, true);
  Var xv = tape.constant(x);
  Var tv = tape.constant(target);
  Var eps = predict_eps_tape(tape, net, vars, xv, alpha);
  Var loss = tape.scalar_mul(tape.squared_error(eps, tv), 0.125);
  GradientMap g = tape.backward(loss);

  const auto eval_loss = [&](const DenoiserNet& probe) {
    const Tensor out = predict_eps(probe, x, alpha);
    double s = 0.0;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
      const double d = out.v[i] - target.v[i];
      s += d * d;
    }
    return 0.125 * s;
  };

  DenoiserNet probe = net;
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t l = 0; l < net.mlp.weights.size(); ++l) {
    const Tensor& analytic = g.at(vars.weights[l]);
    for (std::size_t i = 0; i < analytic.v.size(); i += 7) {  // sampled coordinates
      const double orig = probe.mlp.weights[l].v[i];
      probe.mlp.weights[l].v[i] = orig + h;
      const double fp = eval_loss(probe);
      probe.mlp.weights[l].v[i] = orig - h;
      const double fm = eval_loss(probe);
      probe.mlp.weights[l].v[i] = orig;
      const double cd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic.v[i] - cd) / std::max(1e-8, std::abs(cd)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("embed width and frequency validation") {
  CHECK_THROWS_AS(init_net(2, {8}, SinusoidalEmbedConfig{0, 1.0, 10.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_net(2, {8}, SinusoidalEmbedConfig{4, -1.0, 10.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_net(2, {}, SinusoidalEmbedConfig{4, 1.0, 10.0}, 1), std::invalid_argument);
}

TEST_CASE("flatten/unflatten round trip") {
  DenoiserNet net = init_net(2, {5, 4}, SinusoidalEmbedConfig{4, 1.0, 10.0}, 77);
  const Tensor flat = flatten_params(net.mlp);
  DenoiserNet other = init_net(2, {5, 4}, SinusoidalEmbedConfig{4, 1.0, 10.0}, 78);
  CHECK(params_hash(other.mlp) != params_hash(net.mlp));
  unflatten_params(other.mlp, flat);
  CHECK(params_hash(other.mlp) == params_hash(net.mlp));
}
