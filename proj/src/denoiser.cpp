#include "ddimlab/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ddimlab/rng.hpp"

namespace ddimlab {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Silu: return "silu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "silu") return Activation::Silu;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::vector<double> embed_frequencies(const SinusoidalEmbedConfig& cfg) {
  if (cfg.width < 2 || cfg.width % 2 != 0) throw std::invalid_argument("embed: width must be even and >= 2");
  if (!(cfg.min_freq > 0.0 && cfg.min_freq <= cfg.max_freq)) {
    throw std::invalid_argument("embed: need 0 < min_freq <= max_freq");
  }
  const int m = cfg.width / 2;
  std::vector<double> f(static_cast<std::size_t>(m));
  if (m == 1) {
    f[0] = cfg.min_freq;
    return f;
  }
  const double ratio = cfg.max_freq / cfg.min_freq;
  for (int k = 0; k < m; ++k) {
    f[static_cast<std::size_t>(k)] = cfg.min_freq * std::pow(ratio, static_cast<double>(k) / static_cast<double>(m - 1));
  }
  return f;
}

std::vector<double> sinusoidal_embed(const SinusoidalEmbedConfig& cfg, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::out_of_range("sinusoidal_embed: value outside [0,1]");
  const std::vector<double> f = embed_frequencies(cfg);
  const int m = static_cast<int>(f.size());
  std::vector<double> out(static_cast<std::size_t>(2 * m));
  for (int k = 0; k < m; ++k) {
    const double a = 2.0 * std::numbers::pi * f[static_cast<std::size_t>(k)] * v;
    out[static_cast<std::size_t>(k)] = std::sin(a);
    out[static_cast<std::size_t>(m + k)] = std::cos(a);
  }
  return out;
}

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> p;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.push_back(&weights[l]);
    p.push_back(&biases[l]);
  }
  return p;
}

std::vector<const Tensor*> Mlp::params() const {
  std::vector<const Tensor*> p;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.push_back(&weights[l]);
    p.push_back(&biases[l]);
  }
  return p;
}

std::int64_t Mlp::param_count() const {
  std::int64_t n = 0;
  for (const Tensor* p : params()) n += p->numel();
  return n;
}

Mlp init_mlp(int in_dim, int out_dim, const std::vector<int>& widths, Activation act, RngStream& rng) {
  if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("init_mlp: dimensions must be positive");
  if (widths.empty()) throw std::invalid_argument("init_mlp: widths must be non-empty");
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("init_mlp: widths must be positive");
  }

  Mlp net;
  net.in_dim = in_dim;
  net.out_dim = out_dim;
  net.widths = widths;
  net.act = act;

  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int w : widths) dims.push_back(w);
  dims.push_back(out_dim);

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    // Uniform fan-in scaling: limit sqrt(3/fan_in) gives std 1/sqrt(fan_in).
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    Tensor w({fan_in, fan_out});
    for (double& e : w.v) e = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(std::vector<int>{fan_out});
  }
  return net;
}

Mlp make_mlp_shape(int in_dim, int out_dim, const std::vector<int>& widths, Activation act) {
  Mlp net;
  net.in_dim = in_dim;
  net.out_dim = out_dim;
  net.widths = widths;
  net.act = act;
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int w : widths) dims.push_back(w);
  dims.push_back(out_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    net.weights.emplace_back(std::vector<int>{dims[l], dims[l + 1]});
    net.biases.emplace_back(std::vector<int>{dims[l + 1]});
  }
  return net;
}

Tensor mlp_forward(const Mlp& net, const Tensor& x) {
  if (x.ndim() != 2 || x.shape[1] != net.in_dim) {
    throw std::invalid_argument("mlp_forward: input shape " + x.shape_str() + " does not match in_dim " +
                                std::to_string(net.in_dim));
  }
  Tensor h = x;
  const int L = net.layer_count();
  for (int l = 0; l < L; ++l) {
    h = broadcast_add(matmul(h, net.weights[static_cast<std::size_t>(l)]), net.biases[static_cast<std::size_t>(l)]);
    if (l + 1 < L) h = net.act == Activation::Silu ? silu_op(h) : tanh_op(h);
  }
  return h;
}

MlpVars mlp_leaves(Tape& tape, const Mlp& net, bool requires_grad) {
  MlpVars vars;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    vars.weights.push_back(tape.leaf(net.weights[l], requires_grad));
    vars.biases.push_back(tape.leaf(net.biases[l], requires_grad));
  }
  return vars;
}

Var mlp_forward_tape(Tape& tape, const Mlp& net, const MlpVars& vars, Var x) {
  Var h = x;
  const int L = net.layer_count();
  for (int l = 0; l < L; ++l) {
    h = tape.broadcast_add(tape.matmul(h, vars.weights[static_cast<std::size_t>(l)]),
                           vars.biases[static_cast<std::size_t>(l)]);
    if (l + 1 < L) h = net.act == Activation::Silu ? tape.silu(h) : tape.tanh(h);
  }
  return h;
}

Tensor flatten_params(const Mlp& net) {
  Tensor flat({static_cast<int>(net.param_count())});
  std::size_t k = 0;
  for (const Tensor* p : net.params()) {
    for (double e : p->v) flat.v[k++] = e;
  }
  return flat;
}

void unflatten_params(Mlp& net, const Tensor& flat) {
  if (flat.numel() != net.param_count()) throw std::invalid_argument("unflatten_params: size mismatch");
  std::size_t k = 0;
  for (Tensor* p : net.params()) {
    for (double& e : p->v) e = flat.v[k++];
  }
}

std::uint64_t params_hash(const Mlp& net) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto feed = [&](const Tensor& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    const std::size_t nb = t.v.size() * sizeof(double);
    for (std::size_t i = 0; i < nb; ++i) {
      h ^= bytes[i];
      h *= 0x100000001B3ULL;
    }
  };
  for (const Tensor* p : net.params()) feed(*p);
  return h;
}

DenoiserNet init_net(int d, const std::vector<int>& widths, const SinusoidalEmbedConfig& embed_cfg,
                     std::uint64_t rng_seed) {
  embed_frequencies(embed_cfg);  // validates
  DenoiserNet net;
  net.dim = d;
  net.embed = embed_cfg;
  RngStream rng(rng_seed, "denoiser.init");
  net.mlp = init_mlp(d + embed_cfg.width, d, widths, Activation::Silu, rng);
  return net;
}

Tensor embed_rows(const SinusoidalEmbedConfig& cfg, const std::vector<double>& alpha) {
  const int n = static_cast<int>(alpha.size());
  Tensor rows({n, cfg.width});
  for (int i = 0; i < n; ++i) {
    const double a = alpha[static_cast<std::size_t>(i)];
    if (!(a >= 0.0 && a <= 1.0)) throw std::out_of_range("embed_rows: alpha outside [0,1]");
    const std::vector<double> e = sinusoidal_embed(cfg, 1.0 - a);
    for (int j = 0; j < cfg.width; ++j) rows.at(i, j) = e[static_cast<std::size_t>(j)];
  }
  return rows;
}

Tensor predict_eps(const DenoiserNet& net, const Tensor& x_t, const std::vector<double>& alpha) {
  if (x_t.ndim() != 2 || x_t.shape[1] != net.dim) {
    throw std::invalid_argument("predict_eps: batch shape " + x_t.shape_str() + " does not match dim " +
                                std::to_string(net.dim));
  }
  if (static_cast<std::size_t>(x_t.shape[0]) != alpha.size()) {
    throw std::invalid_argument("predict_eps: one alpha per row required");
  }
  return mlp_forward(net.mlp, concat_cols(x_t, embed_rows(net.embed, alpha)));
}

Var predict_eps_tape(Tape& tape, const DenoiserNet& net, const MlpVars& vars, Var x_t,
                     const std::vector<double>& alpha) {
  Var emb = tape.constant(embed_rows(net.embed, alpha));
  return mlp_forward_tape(tape, net.mlp, vars, tape.concat_cols(x_t, emb));
}

}  // namespace ddimlab
