#include "ddimlab/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ddimlab/rng.hpp"

namespace ddimlab {

EpsFn eps_from_net(const DenoiserNet& net) {
  return [&net](const Tensor& x, const std::vector<double>& alpha) { return predict_eps(net, x, alpha); };
}

Tensor diffuse_alpha(const Tensor& x0, const std::vector<double>& alpha, const Tensor& eps) {
  if (!x0.same_shape(eps)) throw_shape_error("diffuse", x0, eps);
  const int n = x0.rows(), d = x0.cols();
  if (alpha.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("diffuse: one alpha per row required");
  Tensor out = x0;
  for (int i = 0; i < n; ++i) {
    const double a = alpha[static_cast<std::size_t>(i)];
    if (!(a >= 0.0 && a <= 1.0)) throw std::out_of_range("diffuse: alpha outside [0,1]");
    const double sr = std::sqrt(a);
    const double nr = std::sqrt(1.0 - a);
    for (int j = 0; j < d; ++j) out.at(i, j) = sr * x0.at(i, j) + nr * eps.at(i, j);
  }
  return out;
}

Tensor diffuse(const Tensor& x0, const NoiseSchedule& schedule, const std::vector<int>& t, const Tensor& eps) {
  std::vector<double> alpha(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) alpha[i] = schedule.alpha_at(t[i]);
  return diffuse_alpha(x0, alpha, eps);
}

namespace {

std::vector<double> fill_alpha(int n, double a) { return std::vector<double>(static_cast<std::size_t>(n), a); }

}  // namespace

Tensor estimate_x0(const EpsFn& eps, const Tensor& x_t, double alpha_t) {
  if (!(alpha_t > 0.0)) {
    throw std::invalid_argument("estimate_x0: alpha_t must be positive (schedule misuse at pure noise)");
  }
  const Tensor eps_hat = eps(x_t, fill_alpha(x_t.rows(), alpha_t));
  const double inv_sr = 1.0 / std::sqrt(alpha_t);
  const double nr = std::sqrt(1.0 - alpha_t);
  return scalar_mul(add(x_t, scalar_mul(eps_hat, -nr)), inv_sr);
}

Tensor ddim_general_step(const EpsFn& eps, const Tensor& x_t, double alpha_t, double alpha_prev, double sigma,
                         const Tensor& z) {
  if (!(alpha_t > 0.0 && alpha_t <= alpha_prev && alpha_prev <= 1.0 && alpha_t < 1.0)) {
    throw std::invalid_argument("ddim step: need 0 < alpha_t <= alpha_prev <= 1 and alpha_t < 1");
  }
  const Tensor eps_hat = eps(x_t, fill_alpha(x_t.rows(), alpha_t));
  const double inv_sr = 1.0 / std::sqrt(alpha_t);
  const double nr = std::sqrt(1.0 - alpha_t);
  const Tensor x0_hat = scalar_mul(add(x_t, scalar_mul(eps_hat, -nr)), inv_sr);

  double resid = 1.0 - alpha_prev - sigma * sigma;
  if (resid < -1e-12) throw std::invalid_argument("ddim step: sigma too large for alpha_prev");
  if (resid < 0.0) resid = 0.0;
  Tensor out = add(scalar_mul(x0_hat, std::sqrt(alpha_prev)), scalar_mul(eps_hat, std::sqrt(resid)));
  if (sigma != 0.0) out = add(out, scalar_mul(z, sigma));
  return out;
}

Tensor ddim_step(const EpsFn& eps, const Tensor& x_t, double alpha_t, double alpha_prev) {
  return ddim_general_step(eps, x_t, alpha_t, alpha_prev, 0.0, Tensor());
}

Tensor ddpm_step(const EpsFn& eps, const Tensor& x_t, int t, const NoiseSchedule& schedule, const Tensor& z) {
  if (t < 1) throw std::out_of_range("ddpm_step: t must be >= 1");
  const double alpha_t = schedule.alpha_at(t);
  const double alpha_prev = schedule.alpha_at(t - 1);
  if (t == 1) {
    return ddim_general_step(eps, x_t, alpha_t, alpha_prev, 0.0, Tensor());
  }
  const double sigma = schedule.posterior_sigma(t);
  return ddim_general_step(eps, x_t, alpha_t, alpha_prev, sigma, z);
}

namespace {

void generate_rows(const EpsFn& eps, const NoiseSchedule& schedule, const std::vector<int>& idx, const Tensor& seeds,
                   Tensor& out, int row_begin, int row_end, BatchTrajectory* traj) {
  const int d = seeds.cols();
  const int nrows = row_end - row_begin;
  Tensor x({nrows, d});
  for (int i = 0; i < nrows; ++i) {
    for (int j = 0; j < d; ++j) x.at(i, j) = seeds.at(row_begin + i, j);
  }
  const int K = static_cast<int>(idx.size()) - 1;
  for (int s = K; s >= 1; --s) {
    x = ddim_step(eps, x, schedule.alpha_at(idx[static_cast<std::size_t>(s)]),
                  schedule.alpha_at(idx[static_cast<std::size_t>(s) - 1]));
    if (traj) {
      Tensor& slot = traj->x[static_cast<std::size_t>(K - s) + 1];
      for (int i = 0; i < nrows; ++i) {
        for (int j = 0; j < d; ++j) slot.at(row_begin + i, j) = x.at(i, j);
      }
    }
  }
  for (int i = 0; i < nrows; ++i) {
    for (int j = 0; j < d; ++j) out.at(row_begin + i, j) = x.at(i, j);
  }
}

}  // namespace

Tensor generate_batch(const EpsFn& eps, const NoiseSchedule& schedule, const Tensor& seeds, int K, int workers,
                      BatchTrajectory* traj) {
  if (seeds.ndim() != 2) throw std::invalid_argument("generate_batch: seeds must be n x d");
  const std::vector<int> idx = subsequence(schedule, K);
  const int n = seeds.rows();

  if (traj) {
    traj->t.assign(idx.size(), 0);
    traj->x.assign(idx.size(), Tensor());
    for (std::size_t s = 0; s < idx.size(); ++s) {
      traj->t[s] = idx[idx.size() - 1 - s];  // descending from T to 0
      traj->x[s] = Tensor({n, seeds.cols()});
    }
    traj->x[0] = seeds;
  }

  Tensor out({n, seeds.cols()});
  if (n == 0) return out;

  const int nw = std::max(1, std::min(workers, n));
  if (nw == 1) {
    generate_rows(eps, schedule, idx, seeds, out, 0, n, traj);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  const int chunk = (n + nw - 1) / nw;
  for (int w = 0; w < nw; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] { generate_rows(eps, schedule, idx, seeds, out, lo, hi, traj); });
  }
  for (auto& th : pool) th.join();
  return out;
}

PointSet generate_batch(const DenoiserNet& net, const NoiseSchedule& schedule, const PointSet& seeds, int K,
                        int workers, BatchTrajectory* traj) {
  PointSet out;
  out.points = generate_batch(eps_from_net(net), schedule, seeds.points, K, workers, traj);
  out.label = seeds.label + ".generated";
  out.rng_seed = seeds.rng_seed;
  return out;
}

std::pair<Tensor, BatchTrajectory> generate(const EpsFn& eps, const NoiseSchedule& schedule, const Tensor& seed,
                                            int K) {
  Tensor s = seed;
  if (s.ndim() == 1) s.shape = {1, s.shape[0]};
  BatchTrajectory traj;
  Tensor out = generate_batch(eps, schedule, s, K, 1, &traj);
  return {std::move(out), std::move(traj)};
}

ChainEmbedCache make_chain_cache(const DenoiserNet& net, const NoiseSchedule& schedule, int K, int rows) {
  const std::vector<int> idx = subsequence(schedule, K);
  ChainEmbedCache cache;
  const Tensor& w1 = net.mlp.weights.front();
  const Tensor& b1 = net.mlp.biases.front();
  const int d = net.dim;
  const int w = w1.shape[1];

  cache.w1x = Tensor({d, w});
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < w; ++j) cache.w1x.at(i, j) = w1.at(i, j);
  }

  for (int s = K; s >= 1; --s) {
    const double alpha_t = schedule.alpha_at(idx[static_cast<std::size_t>(s)]);
    cache.alphas.emplace_back(static_cast<std::size_t>(rows), alpha_t);
    cache.embeds.push_back(embed_rows(net.embed, cache.alphas.back()));

    const std::vector<double> e = sinusoidal_embed(net.embed, 1.0 - alpha_t);
    Tensor fused({w});
    for (int j = 0; j < w; ++j) {
      double acc = b1.v[static_cast<std::size_t>(j)];
      for (int l = 0; l < net.embed.width; ++l) acc += e[static_cast<std::size_t>(l)] * w1.at(d + l, j);
      fused.v[static_cast<std::size_t>(j)] = acc;
    }
    cache.fused_bias.push_back(std::move(fused));
  }
  return cache;
}

Var generate_tape(Tape& tape, const DenoiserNet& net, const MlpVars& vars, Var z, const NoiseSchedule& schedule,
                  int K, const ChainEmbedCache* cache) {
  const std::vector<int> idx = subsequence(schedule, K);
  Var x = z;
  const int n = tape.val(z).rows();
  Var w1x{-1};
  if (cache) {
    if (tape.node(vars.weights.front().id).requires_grad) {
      throw std::invalid_argument("generate_tape: the fused-conditioning cache requires frozen weights");
    }
    w1x = tape.constant(cache->w1x);
  }
  for (int s = K; s >= 1; --s) {
    const double alpha_t = schedule.alpha_at(idx[static_cast<std::size_t>(s)]);
    const double alpha_prev = schedule.alpha_at(idx[static_cast<std::size_t>(s) - 1]);
    Var eps_hat;
    if (cache) {
      // first layer with the conditioning columns folded into the bias
      Var bias = tape.constant(cache->fused_bias[static_cast<std::size_t>(K - s)]);
      Var h = tape.broadcast_add(tape.matmul(x, w1x), bias);
      const int L = net.mlp.layer_count();
      for (int l = 0; l < L; ++l) {
        if (l > 0) {
          h = tape.broadcast_add(tape.matmul(h, vars.weights[static_cast<std::size_t>(l)]),
                                 vars.biases[static_cast<std::size_t>(l)]);
        }
        if (l + 1 < L) h = net.mlp.act == Activation::Silu ? tape.silu(h) : tape.tanh(h);
      }
      eps_hat = h;
    } else {
      eps_hat = predict_eps_tape(tape, net, vars, x, std::vector<double>(static_cast<std::size_t>(n), alpha_t));
    }
    const double inv_sr = 1.0 / std::sqrt(alpha_t);
    const double nr = std::sqrt(1.0 - alpha_t);
    Var x0_hat = tape.scalar_mul(tape.add(x, tape.scalar_mul(eps_hat, -nr)), inv_sr);
    x = tape.add(tape.scalar_mul(x0_hat, std::sqrt(alpha_prev)), tape.scalar_mul(eps_hat, std::sqrt(1.0 - alpha_prev)));
  }
  return x;
}

TrainReport train(DenoiserNet& net, const PointSet& dataset, const NoiseSchedule& schedule, const TrainOptions& opts,
                  std::uint64_t rng_seed) {
  if (opts.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (opts.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  const int n = dataset.size();
  const int d = dataset.dim();
  if (d != net.dim) throw std::invalid_argument("train: dataset dimension does not match net");

  RngStream pick(rng_seed, "train.batch");
  RngStream times(rng_seed, "train.time");
  RngStream noise(rng_seed, "train.noise");

  std::vector<Tensor*> params = net.mlp.params();
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  AdamState adam = make_adam(cparams, opts.adam);

  const int steps_per_epoch = std::max(1, n / opts.batch_size);
  TrainReport report;
  report.epochs = opts.epochs;
  report.epoch_loss.reserve(static_cast<std::size_t>(opts.epochs));

  const double base_lr = opts.adam.lr;
  const std::int64_t total_steps = static_cast<std::int64_t>(opts.epochs) * steps_per_epoch;
  std::int64_t global_step = 0;

  const int b = opts.batch_size;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    double epoch_sum = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      Tensor x0({b, d});
      for (int i = 0; i < b; ++i) {
        const int row = static_cast<int>(pick.below(static_cast<std::uint64_t>(n)));
        for (int j = 0; j < d; ++j) x0.at(i, j) = dataset.points.at(row, j);
      }
      std::vector<double> alpha(static_cast<std::size_t>(b));
      for (int i = 0; i < b; ++i) {
        if (opts.continuous_time) {
          alpha[static_cast<std::size_t>(i)] = schedule.alpha_continuous(times.uniform());
        } else {
          const int t = 1 + static_cast<int>(times.below(static_cast<std::uint64_t>(schedule.T)));
          alpha[static_cast<std::size_t>(i)] = schedule.alpha_at(t);
        }
      }
      Tensor eps({b, d});
      for (double& e : eps.v) e = noise.gaussian();

      const Tensor x_t = diffuse_alpha(x0, alpha, eps);

      Tape tape;
      MlpVars vars = mlp_leaves(tape, net.mlp, true);
      Var xv = tape.constant(x_t);
      Var target = tape.constant(eps);
      Var eps_hat = predict_eps_tape(tape, net, vars, xv, alpha);
      Var loss = tape.scalar_mul(tape.squared_error(eps_hat, target), 1.0 / static_cast<double>(b * d));

      const double lval = tape.val(loss).v[0];
      if (!std::isfinite(lval)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << " step " << step << " (lr=" << opts.adam.lr << ")";
        throw std::runtime_error(os.str());
      }
      epoch_sum += lval;

      GradientMap g = tape.backward(loss);
      std::vector<const Tensor*> grads;
      grads.reserve(params.size());
      for (std::size_t l = 0; l < vars.weights.size(); ++l) {
        grads.push_back(&g.at(vars.weights[l]));
        grads.push_back(&g.at(vars.biases[l]));
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
  return report;
}

}  // namespace ddimlab
