#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddimlab/datasets.hpp"
#include "ddimlab/denoiser.hpp"
#include "ddimlab/schedule.hpp"

namespace ddimlab {

/// Invalid configuration or command line; mapped to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string kind = "two-moons";  // two-moons | circles | blobs
  int n = 4096;
  double noise_std = 0.05;
  std::vector<double> radii{1.0, 0.5};
  std::vector<std::vector<double>> centers{{-2.0, 0.0}, {0.0, 2.0}, {2.0, 0.0}};
  double cluster_std = 0.3;
  bool normalize = true;
};

PointSet build_dataset(const DatasetSpec& spec, std::uint64_t run_seed);

struct ScheduleSpec {
  std::string kind = "continuous-cosine";
  int T = 1000;
  ScheduleParams params;
};

NoiseSchedule build_schedule(const ScheduleSpec& spec);

struct ArchConfig {
  std::vector<int> widths{128, 128, 128};
  SinusoidalEmbedConfig embed;
};

struct GridConfig {
  double lo = -3.0;
  double hi = 3.0;
  int resolution = 61;
};

struct TrainConfig {
  DatasetSpec dataset;
  ScheduleSpec schedule;
  ArchConfig arch;
  int epochs = 400;
  int batch_size = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool continuous_time = true;
  bool lr_decay = true;
  std::uint64_t run_seed = 1234;
};

struct GenerateConfig {
  std::string checkpoint = "out/checkpoint.json";
  int n_seeds = 512;
  int K = 25;
  bool emit_trajectories = false;
  std::uint64_t run_seed = 1234;
};

struct GravmapConfig {
  std::string checkpoint = "out/checkpoint.json";
  GridConfig grid;
  int K = 25;
  double tau = 0.05;
  std::uint64_t run_seed = 1234;
};

struct EmbedGdConfig {
  std::string checkpoint = "out/checkpoint.json";
  std::string targets_csv;  // optional explicit targets
  int targets = 32;
  int m = 64;
  int steps = 2000;
  double lr = 0.02;
  int K = 25;
  std::uint64_t run_seed = 1234;
};

struct EmbedNetConfig {
  std::string checkpoint = "out/checkpoint.json";
  std::vector<int> widths{128, 128, 128};
  int epochs = 40;
  int batch_size = 64;
  double lr = 1e-3;
  int K = 10;
  int probes = 32;
  int refine_steps = 500;
  double refine_lr = 0.02;
  int refine_K = 25;
  std::uint64_t run_seed = 1234;
};

struct PcaConfig {
  std::string cloud_csv = "out/cloud_000.csv";
  std::string checkpoint;               // optional, needed for traversal
  std::vector<double> traverse_factors; // empty disables traversal
  int component = 1;
  int K = 25;
  std::uint64_t run_seed = 1234;
};

struct DensityConfig {
  std::string checkpoint = "out/checkpoint.json";
  GridConfig grid;
  int M = 4096;
  double bandwidth = 0.2;
  int K = 25;
  std::uint64_t run_seed = 1234;
};

struct UniquenessConfig {
  DatasetSpec dataset;
  ScheduleSpec schedule;
  ArchConfig arch_a;
  ArchConfig arch_b;
  std::uint64_t init_seed_a = 11;
  std::uint64_t init_seed_b = 22;
  int epochs = 400;
  int batch_size = 64;
  double lr = 1e-3;
  int n_seeds = 512;
  int K = 25;
  std::uint64_t run_seed = 1234;
};

struct SchedulesConfig {
  int T = 1000;
  ScheduleParams params;
};

struct GravProfileConfig {
  double sigma = 1.0;
  double r_min = 0.01;
  double r_max = 5.0;
  int samples = 400;
};

// Strict parsing: every field has a default, unknown keys are rejected.
TrainConfig parse_train_config(const std::string& json_text);
GenerateConfig parse_generate_config(const std::string& json_text);
GravmapConfig parse_gravmap_config(const std::string& json_text);
EmbedGdConfig parse_embed_gd_config(const std::string& json_text);
EmbedNetConfig parse_embed_net_config(const std::string& json_text);
PcaConfig parse_pca_config(const std::string& json_text);
DensityConfig parse_density_config(const std::string& json_text);
UniquenessConfig parse_uniqueness_config(const std::string& json_text);
SchedulesConfig parse_schedules_config(const std::string& json_text);
GravProfileConfig parse_grav_profile_config(const std::string& json_text);

// Deterministic re-serialization used to persist configs next to outputs;
// run_seed is always present in the emitted form.
std::string dump_train_config(const TrainConfig& c);
std::string dump_generate_config(const GenerateConfig& c);
std::string dump_gravmap_config(const GravmapConfig& c);
std::string dump_embed_gd_config(const EmbedGdConfig& c);
std::string dump_embed_net_config(const EmbedNetConfig& c);
std::string dump_pca_config(const PcaConfig& c);
std::string dump_density_config(const DensityConfig& c);
std::string dump_uniqueness_config(const UniquenessConfig& c);
std::string dump_schedules_config(const SchedulesConfig& c);
std::string dump_grav_profile_config(const GravProfileConfig& c);

}  // namespace ddimlab
