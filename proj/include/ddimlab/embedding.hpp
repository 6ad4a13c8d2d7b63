#pragma once

#include <cstdint>
#include <vector>

#include "ddimlab/datasets.hpp"
#include "ddimlab/denoiser.hpp"
#include "ddimlab/diffusion.hpp"
#include "ddimlab/schedule.hpp"
#include "ddimlab/tensor.hpp"

namespace ddimlab {

/// Provenance stamped on a seed cloud: the errors stored with it are only
/// meaningful for this (net, schedule, K) triple.
struct SeedCloudMeta {
  int steps = 0;
  double lr = 0.0;
  int K = 0;
  std::uint64_t net_hash = 0;
  std::uint64_t run_seed = 0;
};

/// Empirical emb(x): latent seeds attached to one target plus their squared
/// reconstruction distances.
struct SeedCloud {
  Tensor target;                     // 1 x d
  Tensor seeds;                      // m x d
  std::vector<double> recon_errors;  // squared distance of generate(seed) to target
  std::vector<bool> aborted;         // seeds whose optimization hit a NaN
  SeedCloudMeta meta;

  int size() const { return seeds.rows(); }
};

struct GravMap {
  PointSet grid;
  PointSet outputs;               // row-aligned with grid
  std::vector<int> assignment;    // nearest datapoint index, -1 when beyond tau
  std::vector<double> distance;   // distance to that datapoint
  double tau = 0.0;
  int K = 0;
  std::uint64_t net_hash = 0;
};

struct PcaResult {
  std::vector<double> mean;
  Tensor components;               // d x d, rows are components, descending eigenvalue
  std::vector<double> eigenvalues; // >= 0, descending
};

/// Eq-style weighted attraction: isotropic Gaussian density at z centered at
/// x (std sigma) times the distance between them. L1 distance behind a flag;
/// default Euclidean.
double grav_weight(const std::vector<double>& z, const std::vector<double>& x, double sigma, bool l1_distance = false);

/// 1D radial comparison curves, each rescaled to unit trapezoid integral:
/// the weighted attraction profile and constant-density-body gravity with
/// body radius sigma.
struct GravProfile {
  std::vector<double> r;
  std::vector<double> weighted;
  std::vector<double> gravity;
};

GravProfile grav_profile(double sigma, const std::vector<double>& r_grid);

GravMap grav_map(const DenoiserNet& net, const NoiseSchedule& schedule, const PointSet& dataset,
                 const PointSet& grid, int K, double tau, int workers = 1);

/// Grid rows whose reverse-diffusion output lands within tol of x.
SeedCloud emb_cloud_from_grid(const GravMap& map, const std::vector<double>& x, double tol);

struct EmbedGdOptions {
  int m = 64;
  int steps = 2000;
  double lr = 0.02;
  int K = 25;
};

/// Gradient-descent seed synthesis: m seeds from N(0, I), each optimized on
/// its squared reconstruction distance by backprop through the K-step chain.
/// The best iterate per seed is returned, so the reported error never
/// exceeds the initial one. Net parameters are untouched.
SeedCloud embed_gd(const DenoiserNet& net, const NoiseSchedule& schedule, const std::vector<double>& target,
                   const EmbedGdOptions& opts, std::uint64_t run_seed, std::uint64_t task_index = 0);

/// Row-parallel variant: one cloud per row of `targets`. Each target keeps
/// its own RNG stream index, so results match per-target serial runs for any
/// worker count.
std::vector<SeedCloud> embed_gd_batch(const DenoiserNet& net, const NoiseSchedule& schedule, const Tensor& targets,
                                      const EmbedGdOptions& opts, std::uint64_t run_seed, int workers = 1);

struct ComboResult {
  Tensor weights;                    // count x m, each row sums to 1
  Tensor combo_seeds;                // count x d
  std::vector<double> recon_errors;  // against the cloud's target
};

/// Random 1-sum combinations of the cloud seeds pushed through generation.
/// Default weights are Dirichlet(1,...,1) (convex hull); signed_weights
/// allows negative coefficients that still sum to 1.
ComboResult convex_combos(const DenoiserNet& net, const NoiseSchedule& schedule, const SeedCloud& cloud, int count,
                          std::uint64_t rng_seed, bool signed_weights = false);

/// Reconstruction error of generate(mean of first k seeds) for each k.
std::vector<double> progressive_mean(const DenoiserNet& net, const NoiseSchedule& schedule, const SeedCloud& cloud,
                                     const std::vector<int>& ks);

PcaResult pca_points(const Tensor& pts);
PcaResult pca_cloud(const SeedCloud& cloud);

/// Outputs of seeds mean + factor * sqrt(eigenvalue) * component.
Tensor traverse_component(const DenoiserNet& net, const NoiseSchedule& schedule, const SeedCloud& cloud,
                          const PcaResult& pca, int component, const std::vector<double>& factors, int K);

struct EmbedNetTrainOptions {
  int epochs = 40;
  int batch_size = 64;
  AdamParams adam;
  int K = 10;
  bool lr_decay = true;
};

/// Trains the d -> d inverter on mean squared reconstruction distance
/// through the frozen generator chain.
TrainReport train_embed_net(Mlp& enet, const DenoiserNet& net, const NoiseSchedule& schedule, const PointSet& dataset,
                            const EmbedNetTrainOptions& opts, std::uint64_t rng_seed);

Mlp init_embed_net(int d, const std::vector<int>& widths, std::uint64_t rng_seed);

struct RefineResult {
  Tensor seed;  // 1 x d
  double error_before = 0.0;
  double error_after = 0.0;
};

/// Gradient refinement of one given seed toward one target; error_after is
/// the best iterate's error, never above error_before.
RefineResult refine_seed_gd(const DenoiserNet& net, const NoiseSchedule& schedule, const std::vector<double>& seed,
                            const std::vector<double>& target, int steps, double lr, int K);

/// Row-wise variant: seed row i is refined toward target row i on shared
/// tapes; identical to one-at-a-time refinement.
std::vector<RefineResult> refine_seeds_gd(const DenoiserNet& net, const NoiseSchedule& schedule, const Tensor& seeds,
                                          const Tensor& targets, int steps, double lr, int K);

struct GridSpec {
  std::vector<std::pair<double, double>> bounds{{-3.0, 3.0}, {-3.0, 3.0}};
  int resolution = 61;
};

struct DensityResult {
  PointSet grid;
  std::vector<double> density;  // per grid cell, integrates to 1 with cell_area weighting
  double cell_area = 0.0;
  double bandwidth = 0.0;
  double norm = 0.0;            // divisor applied to the raw kernel average
  Tensor outputs;               // generator outputs the estimate is built from

  double eval(const std::vector<double>& point) const;
};

/// Push M standard-normal seeds through the generator and kernel-estimate
/// the output distribution on a regular grid.
DensityResult pushforward_density(const DenoiserNet& net, const NoiseSchedule& schedule, const GridSpec& grid, int M,
                                  double bandwidth, int K, std::uint64_t rng_seed, int workers = 1);

struct UniquenessReport {
  double d_pair = 0.0;
  double d_rand = 0.0;
  double ratio = 0.0;
  Tensor out_a;
  Tensor out_b;
};

/// Mean paired distance between two generators fed the same seeds versus the
/// mean distance under a random re-pairing.
UniquenessReport uniqueness_compare(const DenoiserNet& a, const DenoiserNet& b, const NoiseSchedule& schedule,
                                    const Tensor& shared_seeds, int K, std::uint64_t rng_seed, int workers = 1);

struct ArchSpec {
  std::vector<int> widths{128, 128, 128};
  SinusoidalEmbedConfig embed;
  std::uint64_t init_seed = 0;
};

/// Full cross-model experiment: trains both architectures independently on
/// the dataset, then compares them on shared seeds.
UniquenessReport uniqueness_experiment(const PointSet& dataset, const NoiseSchedule& schedule, const ArchSpec& arch_a,
                                       const ArchSpec& arch_b, const Tensor& shared_seeds, const TrainOptions& topts,
                                       int K, std::uint64_t run_seed, int workers = 1);

}  // namespace ddimlab
