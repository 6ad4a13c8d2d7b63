#pragma once

#include <cstdint>
#include <string>

#include "ddimlab/config.hpp"
#include "ddimlab/denoiser.hpp"

namespace ddimlab {

inline constexpr int kCheckpointFormatVersion = 1;

struct Provenance {
  std::string label;
  int epochs = 0;
  std::uint64_t run_seed = 0;
  double final_loss = 0.0;
};

/// Everything needed to reload a trained model and regenerate its training
/// setup: architecture, schedule, dataset recipe, flat parameters, and the
/// training provenance. JSON on disk; parameters round-trip bitwise.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::string kind = "denoiser";  // "denoiser" | "embednet"
  int dim = 2;
  std::vector<int> widths;
  std::string activation = "silu";
  SinusoidalEmbedConfig embed;  // denoiser only
  ScheduleSpec schedule;
  DatasetSpec dataset;
  Provenance provenance;
  std::vector<std::vector<double>> weights;  // flattened row-major per layer
  std::vector<std::vector<double>> biases;
};

Checkpoint checkpoint_from_denoiser(const DenoiserNet& net, const ScheduleSpec& schedule, const DatasetSpec& dataset,
                                    const Provenance& prov);
Checkpoint checkpoint_from_embed_net(const Mlp& enet, const ScheduleSpec& schedule, const DatasetSpec& dataset,
                                     const Provenance& prov);

DenoiserNet denoiser_from_checkpoint(const Checkpoint& c);
Mlp embed_net_from_checkpoint(const Checkpoint& c);

std::string dump_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& json_text);

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ddimlab
