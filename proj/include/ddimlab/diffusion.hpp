#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ddimlab/datasets.hpp"
#include "ddimlab/denoiser.hpp"
#include "ddimlab/optim.hpp"
#include "ddimlab/schedule.hpp"
#include "ddimlab/tape.hpp"
#include "ddimlab/tensor.hpp"

namespace ddimlab {

/// Noise predictor as a function of (x_t batch, per-row alpha). Lets tests
/// inject closed-form oracles where a trained net would go.
using EpsFn = std::function<Tensor(const Tensor&, const std::vector<double>&)>;

EpsFn eps_from_net(const DenoiserNet& net);

/// x_t = sqrt(alpha) x0 + sqrt(1 - alpha) eps, elementwise per row.
Tensor diffuse_alpha(const Tensor& x0, const std::vector<double>& alpha, const Tensor& eps);

/// Table-indexed variant; t per row.
Tensor diffuse(const Tensor& x0, const NoiseSchedule& schedule, const std::vector<int>& t, const Tensor& eps);

/// One-shot denoised estimate: (x_t - sqrt(1 - alpha) eps_hat) / sqrt(alpha).
Tensor estimate_x0(const EpsFn& eps, const Tensor& x_t, double alpha_t);

/// Deterministic reverse step from alpha_t up to alpha_prev.
Tensor ddim_step(const EpsFn& eps, const Tensor& x_t, double alpha_t, double alpha_prev);

/// Reverse step with explicit noise scale: sqrt(alpha_prev) x0_hat +
/// sqrt(1 - alpha_prev - sigma^2) eps_hat + sigma z. sigma = 0 recovers
/// ddim_step; sigma = posterior keeps the stochastic chain's marginals.
Tensor ddim_general_step(const EpsFn& eps, const Tensor& x_t, double alpha_t, double alpha_prev, double sigma,
                         const Tensor& z);

/// Stochastic ancestral step t -> t-1 with the linear-beta posterior sigma.
/// z is forced to zero at t = 1.
Tensor ddpm_step(const EpsFn& eps, const Tensor& x_t, int t, const NoiseSchedule& schedule, const Tensor& z);

/// States of one reverse run, batch-aligned: x[k] is the whole batch at
/// step index t[k]; t strictly decreasing, ending at 0.
struct BatchTrajectory {
  std::vector<int> t;
  std::vector<Tensor> x;
};

/// Deterministic generation along subsequence(schedule, K); row i of the
/// output depends only on seed row i.
Tensor generate_batch(const EpsFn& eps, const NoiseSchedule& schedule, const Tensor& seeds, int K,
                      int workers = 1, BatchTrajectory* traj = nullptr);

PointSet generate_batch(const DenoiserNet& net, const NoiseSchedule& schedule, const PointSet& seeds, int K,
                        int workers = 1, BatchTrajectory* traj = nullptr);

/// Single-seed convenience wrapper.
std::pair<Tensor, BatchTrajectory> generate(const EpsFn& eps, const NoiseSchedule& schedule, const Tensor& seed,
                                            int K);

/// Precomputed per-step conditioning for a fixed (schedule, K, batch rows);
/// spares repeated trig when the same chain is taped thousands of times
/// during inversion. Since every row of a step shares one alpha, the
/// conditioning columns of the first layer fold into a per-step bias row;
/// that shortcut requires frozen denoiser weights.
struct ChainEmbedCache {
  std::vector<std::vector<double>> alphas;  // chain order, s = K down to 1
  std::vector<Tensor> embeds;
  Tensor w1x;                      // data columns of the first-layer weights
  std::vector<Tensor> fused_bias;  // per step: b1 + embed_row * W1_embed
};

ChainEmbedCache make_chain_cache(const DenoiserNet& net, const NoiseSchedule& schedule, int K, int rows);

/// Records the whole K-step reverse chain on `tape` starting from the seed
/// var `z`; gradients flow into z and into any unfrozen net parameters.
Var generate_tape(Tape& tape, const DenoiserNet& net, const MlpVars& vars, Var z, const NoiseSchedule& schedule,
                  int K, const ChainEmbedCache* cache = nullptr);

struct TrainReport {
  std::vector<double> epoch_loss;
  int epochs = 0;
  double final_loss = 0.0;
};

struct TrainOptions {
  int epochs = 400;
  int batch_size = 64;
  AdamParams adam;
  /// Sample the diffusion time continuously through the schedule (uniform
  /// angle for continuous-cosine); false falls back to the integer grid.
  bool continuous_time = true;
  /// Cosine-decay the learning rate to zero across the run; lets the last
  /// epochs settle instead of wandering at full step size.
  bool lr_decay = true;
};

/// Noise-prediction training: per step sample an x0 minibatch, a diffusion
/// time, eps ~ N(0, I), and take an adaptive-moment step on the unweighted
/// squared error. Deterministic per rng_seed.
TrainReport train(DenoiserNet& net, const PointSet& dataset, const NoiseSchedule& schedule,
                  const TrainOptions& opts, std::uint64_t rng_seed);

}  // namespace ddimlab
