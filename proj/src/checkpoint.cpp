#include "ddimlab/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_io.hpp"

namespace ddimlab {

namespace {

std::vector<double> tensor_to_flat(const Tensor& t) { return t.v; }

}  // namespace

Checkpoint checkpoint_from_denoiser(const DenoiserNet& net, const ScheduleSpec& schedule, const DatasetSpec& dataset,
                                    const Provenance& prov) {
  Checkpoint c;
  c.kind = "denoiser";
  c.dim = net.dim;
  c.widths = net.mlp.widths;
  c.activation = activation_name(net.mlp.act);
  c.embed = net.embed;
  c.schedule = schedule;
  c.dataset = dataset;
  c.provenance = prov;
  for (const Tensor& w : net.mlp.weights) c.weights.push_back(tensor_to_flat(w));
  for (const Tensor& b : net.mlp.biases) c.biases.push_back(tensor_to_flat(b));
  return c;
}

Checkpoint checkpoint_from_embed_net(const Mlp& enet, const ScheduleSpec& schedule, const DatasetSpec& dataset,
                                     const Provenance& prov) {
  Checkpoint c;
  c.kind = "embednet";
  c.dim = enet.in_dim;
  c.widths = enet.widths;
  c.activation = activation_name(enet.act);
  c.schedule = schedule;
  c.dataset = dataset;
  c.provenance = prov;
  for (const Tensor& w : enet.weights) c.weights.push_back(tensor_to_flat(w));
  for (const Tensor& b : enet.biases) c.biases.push_back(tensor_to_flat(b));
  return c;
}

namespace {

void load_mlp_params(Mlp& mlp, const Checkpoint& c) {
  if (c.weights.size() != mlp.weights.size() || c.biases.size() != mlp.biases.size()) {
    throw std::runtime_error("checkpoint: layer count mismatch");
  }
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    if (c.weights[l].size() != mlp.weights[l].v.size() || c.biases[l].size() != mlp.biases[l].v.size()) {
      throw std::runtime_error("checkpoint: parameter size mismatch at layer " + std::to_string(l));
    }
    mlp.weights[l].v = c.weights[l];
    mlp.biases[l].v = c.biases[l];
  }
}

}  // namespace

DenoiserNet denoiser_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "denoiser") throw std::runtime_error("checkpoint: expected a denoiser checkpoint");
  DenoiserNet net;
  net.dim = c.dim;
  net.embed = c.embed;
  net.mlp = make_mlp_shape(c.dim + c.embed.width, c.dim, c.widths, activation_from_name(c.activation));
  load_mlp_params(net.mlp, c);
  return net;
}

Mlp embed_net_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "embednet") throw std::runtime_error("checkpoint: expected an embednet checkpoint");
  Mlp enet = make_mlp_shape(c.dim, c.dim, c.widths, activation_from_name(c.activation));
  load_mlp_params(enet, c);
  return enet;
}

std::string dump_checkpoint(const Checkpoint& c) {
  JsonObj arch;
  arch.num("dim", c.dim).field("widths", jarr(c.widths)).str("activation", c.activation);
  if (c.kind == "denoiser") {
    arch.field("embed", JsonObj()
                            .num("L", c.embed.width)
                            .num("min_freq", c.embed.min_freq)
                            .num("max_freq", c.embed.max_freq)
                            .str());
  }

  std::ostringstream weights;
  weights << "[";
  for (std::size_t l = 0; l < c.weights.size(); ++l) weights << (l ? "," : "") << jarr(c.weights[l]);
  weights << "]";
  std::ostringstream biases;
  biases << "[";
  for (std::size_t l = 0; l < c.biases.size(); ++l) biases << (l ? "," : "") << jarr(c.biases[l]);
  biases << "]";

  return JsonObj()
      .num("format_version", c.format_version)
      .str("kind", c.kind)
      .field("arch", arch.str())
      .field("schedule", JsonObj()
                             .str("kind", c.schedule.kind)
                             .num("T", c.schedule.T)
                             .num("beta_min", c.schedule.params.beta_min)
                             .num("beta_max", c.schedule.params.beta_max)
                             .num("cosine_s", c.schedule.params.cosine_s)
                             .num("max_signal", c.schedule.params.max_signal)
                             .num("min_signal", c.schedule.params.min_signal)
                             .str())
      .field("dataset", JsonObj()
                            .str("kind", c.dataset.kind)
                            .num("n", c.dataset.n)
                            .num("noise_std", c.dataset.noise_std)
                            .field("radii", jarr(c.dataset.radii))
                            .field("centers", jarr2(c.dataset.centers))
                            .num("cluster_std", c.dataset.cluster_std)
                            .boolean("normalize", c.dataset.normalize)
                            .str())
      .field("provenance", JsonObj()
                               .str("label", c.provenance.label)
                               .num("epochs", c.provenance.epochs)
                               .num("run_seed", c.provenance.run_seed)
                               .num("final_loss", c.provenance.final_loss)
                               .str())
      .field("params", JsonObj().field("weights", weights.str()).field("biases", biases.str()).str())
      .str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  const nlohmann::json j = parse_json(text, "checkpoint");
  StrictReader r(j, "checkpoint");

  Checkpoint c;
  c.format_version = r.integer("format_version", -1);
  if (c.format_version != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format_version " + std::to_string(c.format_version) +
                             " (expected " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  c.kind = r.str("kind", "");
  if (c.kind != "denoiser" && c.kind != "embednet") throw std::runtime_error("checkpoint: unknown kind '" + c.kind + "'");

  StrictReader arch = r.child("arch");
  c.dim = arch.integer("dim", 0);
  c.widths = arch.vec_int("widths", {});
  c.activation = arch.str("activation", "silu");
  if (c.kind == "denoiser") {
    StrictReader e = arch.child("embed");
    c.embed.width = e.integer("L", 0);
    c.embed.min_freq = e.num("min_freq", 0.0);
    c.embed.max_freq = e.num("max_freq", 0.0);
    e.finish();
  }
  arch.finish();

  StrictReader s = r.child("schedule");
  c.schedule.kind = s.str("kind", c.schedule.kind);
  c.schedule.T = s.integer("T", c.schedule.T);
  c.schedule.params.beta_min = s.num("beta_min", c.schedule.params.beta_min);
  c.schedule.params.beta_max = s.num("beta_max", c.schedule.params.beta_max);
  c.schedule.params.cosine_s = s.num("cosine_s", c.schedule.params.cosine_s);
  c.schedule.params.max_signal = s.num("max_signal", c.schedule.params.max_signal);
  c.schedule.params.min_signal = s.num("min_signal", c.schedule.params.min_signal);
  s.finish();

  StrictReader d = r.child("dataset");
  c.dataset.kind = d.str("kind", c.dataset.kind);
  c.dataset.n = d.integer("n", c.dataset.n);
  c.dataset.noise_std = d.num("noise_std", c.dataset.noise_std);
  c.dataset.radii = d.vec_double("radii", c.dataset.radii);
  c.dataset.centers = d.vec_vec_double("centers", c.dataset.centers);
  c.dataset.cluster_std = d.num("cluster_std", c.dataset.cluster_std);
  c.dataset.normalize = d.boolean("normalize", c.dataset.normalize);
  d.finish();

  StrictReader p = r.child("provenance");
  c.provenance.label = p.str("label", "");
  c.provenance.epochs = p.integer("epochs", 0);
  c.provenance.run_seed = p.uinteger("run_seed", 0);
  c.provenance.final_loss = p.num("final_loss", 0.0);
  p.finish();

  StrictReader params = r.child("params");
  c.weights = params.vec_vec_double("weights", {});
  c.biases = params.vec_vec_double("biases", {});
  params.finish();
  r.finish();

  if (c.weights.empty() || c.weights.size() != c.biases.size()) {
    throw std::runtime_error("checkpoint: malformed parameter arrays");
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << dump_checkpoint(c) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace ddimlab
