#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddimlab/tape.hpp"
#include "ddimlab/tensor.hpp"

namespace ddimlab {

class RngStream;

enum class Activation { Silu, Tanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Sinusoidal conditioning on the noise level: width must be even, and the
/// width/2 frequencies are spaced geometrically between min_freq and
/// max_freq (min_freq == max_freq is allowed and collapses the band).
struct SinusoidalEmbedConfig {
  int width = 32;
  double min_freq = 1.0;
  double max_freq = 1000.0;
};

std::vector<double> embed_frequencies(const SinusoidalEmbedConfig& cfg);

/// [sin(2 pi f_k v)..., cos(2 pi f_k v)...] for v in [0, 1].
std::vector<double> sinusoidal_embed(const SinusoidalEmbedConfig& cfg, double v);

/// Plain fully connected stack; hidden layers activated, output layer linear.
struct Mlp {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<int> widths;
  Activation act = Activation::Silu;
  std::vector<Tensor> weights;  // [in_l x out_l]
  std::vector<Tensor> biases;   // [out_l]

  int layer_count() const { return static_cast<int>(widths.size()) + 1; }
  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  std::int64_t param_count() const;
};

Mlp init_mlp(int in_dim, int out_dim, const std::vector<int>& widths, Activation act, RngStream& rng);

/// Zero-parameter stack of the given shape; used when parameters come from
/// a checkpoint.
Mlp make_mlp_shape(int in_dim, int out_dim, const std::vector<int>& widths, Activation act);

Tensor mlp_forward(const Mlp& net, const Tensor& x);

/// Tape handles for the stack's parameters; requires_grad=false freezes them.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

MlpVars mlp_leaves(Tape& tape, const Mlp& net, bool requires_grad);
Var mlp_forward_tape(Tape& tape, const Mlp& net, const MlpVars& vars, Var x);

/// Flatten / restore all parameters, row-major per tensor in layer order.
Tensor flatten_params(const Mlp& net);
void unflatten_params(Mlp& net, const Tensor& flat);

std::uint64_t params_hash(const Mlp& net);

/// The trainable noise predictor: an MLP over concat(x_t, E(1 - alpha_t)).
/// Conditioning enters at the input layer only.
struct DenoiserNet {
  int dim = 2;
  SinusoidalEmbedConfig embed;
  Mlp mlp;
};

DenoiserNet init_net(int d, const std::vector<int>& widths, const SinusoidalEmbedConfig& embed_cfg,
                     std::uint64_t rng_seed);

/// Embedding rows for a batch: row i is sinusoidal_embed(cfg, 1 - alpha[i]).
Tensor embed_rows(const SinusoidalEmbedConfig& cfg, const std::vector<double>& alpha);

Tensor predict_eps(const DenoiserNet& net, const Tensor& x_t, const std::vector<double>& alpha);

Var predict_eps_tape(Tape& tape, const DenoiserNet& net, const MlpVars& vars, Var x_t,
                     const std::vector<double>& alpha);

}  // namespace ddimlab
