#include "ddimlab/config.hpp"

#include "json_io.hpp"

namespace ddimlab {

nlohmann::json parse_json(const std::string& text, const std::string& where) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(where + ": invalid JSON");
  return j;
}


namespace {

void require_cfg(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

PointSet build_dataset(const DatasetSpec& spec, std::uint64_t run_seed) {
  PointSet ps;
  if (spec.kind == "two-moons") {
    ps = gen_two_moons(spec.n, spec.noise_std, run_seed);
  } else if (spec.kind == "circles") {
    ps = gen_circles(spec.n, spec.radii, spec.noise_std, run_seed);
  } else if (spec.kind == "blobs") {
    ps = gen_blobs(spec.n, spec.centers, spec.cluster_std, run_seed);
  } else {
    throw ConfigError("dataset.kind: unknown dataset '" + spec.kind + "'");
  }
  if (spec.normalize) {
    auto [norm, tf] = normalize(ps);
    return std::move(norm);
  }
  return ps;
}

NoiseSchedule build_schedule(const ScheduleSpec& spec) {
  return make_schedule(schedule_kind_from_name(spec.kind), spec.T, spec.params);
}

namespace {

DatasetSpec read_dataset(StrictReader& r) {
  DatasetSpec d;
  StrictReader c = r.child("dataset");
  d.kind = c.str("kind", d.kind);
  d.n = c.integer("n", d.n);
  d.noise_std = c.num("noise_std", d.noise_std);
  d.radii = c.vec_double("radii", d.radii);
  d.centers = c.vec_vec_double("centers", d.centers);
  d.cluster_std = c.num("cluster_std", d.cluster_std);
  d.normalize = c.boolean("normalize", d.normalize);
  c.finish();
  return d;
}

ScheduleSpec read_schedule(StrictReader& r) {
  ScheduleSpec s;
  StrictReader c = r.child("schedule");
  s.kind = c.str("kind", s.kind);
  s.T = c.integer("T", s.T);
  s.params.beta_min = c.num("beta_min", s.params.beta_min);
  s.params.beta_max = c.num("beta_max", s.params.beta_max);
  s.params.cosine_s = c.num("cosine_s", s.params.cosine_s);
  s.params.max_signal = c.num("max_signal", s.params.max_signal);
  s.params.min_signal = c.num("min_signal", s.params.min_signal);
  c.finish();
  return s;
}

ArchConfig read_arch(StrictReader& r, const char* key) {
  ArchConfig a;
  StrictReader c = r.child(key);
  a.widths = c.vec_int("widths", a.widths);
  StrictReader e = c.child("embed");
  a.embed.width = e.integer("L", a.embed.width);
  a.embed.min_freq = e.num("min_freq", a.embed.min_freq);
  a.embed.max_freq = e.num("max_freq", a.embed.max_freq);
  e.finish();
  c.finish();
  return a;
}

GridConfig read_grid(StrictReader& r) {
  GridConfig g;
  StrictReader c = r.child("grid");
  g.lo = c.num("lo", g.lo);
  g.hi = c.num("hi", g.hi);
  g.resolution = c.integer("resolution", g.resolution);
  c.finish();
  return g;
}

std::string dump_dataset(const DatasetSpec& d) {
  return JsonObj()
      .str("kind", d.kind)
      .num("n", d.n)
      .num("noise_std", d.noise_std)
      .field("radii", jarr(d.radii))
      .field("centers", jarr2(d.centers))
      .num("cluster_std", d.cluster_std)
      .boolean("normalize", d.normalize)
      .str();
}

std::string dump_schedule(const ScheduleSpec& s) {
  return JsonObj()
      .str("kind", s.kind)
      .num("T", s.T)
      .num("beta_min", s.params.beta_min)
      .num("beta_max", s.params.beta_max)
      .num("cosine_s", s.params.cosine_s)
      .num("max_signal", s.params.max_signal)
      .num("min_signal", s.params.min_signal)
      .str();
}

std::string dump_arch(const ArchConfig& a) {
  return JsonObj()
      .field("widths", jarr(a.widths))
      .field("embed", JsonObj()
                          .num("L", a.embed.width)
                          .num("min_freq", a.embed.min_freq)
                          .num("max_freq", a.embed.max_freq)
                          .str())
      .str();
}

std::string dump_grid(const GridConfig& g) {
  return JsonObj().num("lo", g.lo).num("hi", g.hi).num("resolution", g.resolution).str();
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  StrictReader r(parse_json(text, "train config"), "train");
  TrainConfig c;
  c.dataset = read_dataset(r);
  c.schedule = read_schedule(r);
  c.arch = read_arch(r, "arch");
  c.epochs = r.integer("epochs", c.epochs);
  c.batch_size = r.integer("batch_size", c.batch_size);
  c.lr = r.num("lr", c.lr);
  c.beta1 = r.num("beta1", c.beta1);
  c.beta2 = r.num("beta2", c.beta2);
  c.adam_eps = r.num("adam_eps", c.adam_eps);
  c.continuous_time = r.boolean("continuous_time", c.continuous_time);
  c.lr_decay = r.boolean("lr_decay", c.lr_decay);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.epochs >= 1, "train.epochs must be >= 1");
  require_cfg(c.batch_size >= 1, "train.batch_size must be >= 1");
  require_cfg(c.lr >= 0.0, "train.lr must be >= 0");
  require_cfg(c.dataset.n >= 2, "dataset.n must be >= 2");
  require_cfg(c.schedule.T >= 2, "schedule.T must be >= 2");
  return c;
}

std::string dump_train_config(const TrainConfig& c) {
  return JsonObj()
      .field("dataset", dump_dataset(c.dataset))
      .field("schedule", dump_schedule(c.schedule))
      .field("arch", dump_arch(c.arch))
      .num("epochs", c.epochs)
      .num("batch_size", c.batch_size)
      .num("lr", c.lr)
      .num("beta1", c.beta1)
      .num("beta2", c.beta2)
      .num("adam_eps", c.adam_eps)
      .boolean("continuous_time", c.continuous_time)
      .boolean("lr_decay", c.lr_decay)
      .num("run_seed", c.run_seed)
      .str();
}

GenerateConfig parse_generate_config(const std::string& text) {
  StrictReader r(parse_json(text, "generate config"), "generate");
  GenerateConfig c;
  c.checkpoint = r.str("checkpoint", c.checkpoint);
  c.n_seeds = r.integer("n_seeds", c.n_seeds);
  c.K = r.integer("K", c.K);
  c.emit_trajectories = r.boolean("emit_trajectories", c.emit_trajectories);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.n_seeds >= 0, "generate.n_seeds must be >= 0");
  require_cfg(c.K >= 2, "generate.K must be >= 2");
  return c;
}

std::string dump_generate_config(const GenerateConfig& c) {
  return JsonObj()
      .str("checkpoint", c.checkpoint)
      .num("n_seeds", c.n_seeds)
      .num("K", c.K)
      .boolean("emit_trajectories", c.emit_trajectories)
      .num("run_seed", c.run_seed)
      .str();
}

GravmapConfig parse_gravmap_config(const std::string& text) {
  StrictReader r(parse_json(text, "gravmap config"), "gravmap");
  GravmapConfig c;
  c.checkpoint = r.str("checkpoint", c.checkpoint);
  c.grid = read_grid(r);
  c.K = r.integer("K", c.K);
  c.tau = r.num("tau", c.tau);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.K >= 2, "gravmap.K must be >= 2");
  require_cfg(c.tau >= 0.0, "gravmap.tau must be >= 0");
  require_cfg(c.grid.resolution >= 2, "grid.resolution must be >= 2");
  return c;
}

std::string dump_gravmap_config(const GravmapConfig& c) {
  return JsonObj()
      .str("checkpoint", c.checkpoint)
      .field("grid", dump_grid(c.grid))
      .num("K", c.K)
      .num("tau", c.tau)
      .num("run_seed", c.run_seed)
      .str();
}

EmbedGdConfig parse_embed_gd_config(const std::string& text) {
  StrictReader r(parse_json(text, "embed-gd config"), "embed-gd");
  EmbedGdConfig c;
  c.checkpoint = r.str("checkpoint", c.checkpoint);
  c.targets_csv = r.str("targets_csv", c.targets_csv);
  c.targets = r.integer("targets", c.targets);
  c.m = r.integer("m", c.m);
  c.steps = r.integer("steps", c.steps);
  c.lr = r.num("lr", c.lr);
  c.K = r.integer("K", c.K);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.targets >= 1, "embed-gd.targets must be >= 1");
  require_cfg(c.m >= 1, "embed-gd.m must be >= 1");
  require_cfg(c.steps >= 0, "embed-gd.steps must be >= 0");
  require_cfg(c.K >= 2, "embed-gd.K must be >= 2");
  return c;
}

std::string dump_embed_gd_config(const EmbedGdConfig& c) {
  return JsonObj()
      .str("checkpoint", c.checkpoint)
      .str("targets_csv", c.targets_csv)
      .num("targets", c.targets)
      .num("m", c.m)
      .num("steps", c.steps)
      .num("lr", c.lr)
      .num("K", c.K)
      .num("run_seed", c.run_seed)
      .str();
}

EmbedNetConfig parse_embed_net_config(const std::string& text) {
  StrictReader r(parse_json(text, "embed-net config"), "embed-net");
  EmbedNetConfig c;
  c.checkpoint = r.str("checkpoint", c.checkpoint);
  c.widths = r.vec_int("widths", c.widths);
  c.epochs = r.integer("epochs", c.epochs);
  c.batch_size = r.integer("batch_size", c.batch_size);
  c.lr = r.num("lr", c.lr);
  c.K = r.integer("K", c.K);
  c.probes = r.integer("probes", c.probes);
  c.refine_steps = r.integer("refine_steps", c.refine_steps);
  c.refine_lr = r.num("refine_lr", c.refine_lr);
  c.refine_K = r.integer("refine_K", c.refine_K);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.epochs >= 1, "embed-net.epochs must be >= 1");
  require_cfg(c.K >= 2 && c.refine_K >= 2, "embed-net chain depths must be >= 2");
  require_cfg(c.probes >= 1, "embed-net.probes must be >= 1");
  require_cfg(c.refine_steps >= 0, "embed-net.refine_steps must be >= 0");
  return c;
}

std::string dump_embed_net_config(const EmbedNetConfig& c) {
  return JsonObj()
      .str("checkpoint", c.checkpoint)
      .field("widths", jarr(c.widths))
      .num("epochs", c.epochs)
      .num("batch_size", c.batch_size)
      .num("lr", c.lr)
      .num("K", c.K)
      .num("probes", c.probes)
      .num("refine_steps", c.refine_steps)
      .num("refine_lr", c.refine_lr)
      .num("refine_K", c.refine_K)
      .num("run_seed", c.run_seed)
      .str();
}

PcaConfig parse_pca_config(const std::string& text) {
  StrictReader r(parse_json(text, "pca config"), "pca");
  PcaConfig c;
  c.cloud_csv = r.str("cloud_csv", c.cloud_csv);
  c.checkpoint = r.str("checkpoint", c.checkpoint);
  c.traverse_factors = r.vec_double("traverse_factors", c.traverse_factors);
  c.component = r.integer("component", c.component);
  c.K = r.integer("K", c.K);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  return c;
}

std::string dump_pca_config(const PcaConfig& c) {
  return JsonObj()
      .str("cloud_csv", c.cloud_csv)
      .str("checkpoint", c.checkpoint)
      .field("traverse_factors", jarr(c.traverse_factors))
      .num("component", c.component)
      .num("K", c.K)
      .num("run_seed", c.run_seed)
      .str();
}

DensityConfig parse_density_config(const std::string& text) {
  StrictReader r(parse_json(text, "density config"), "density");
  DensityConfig c;
  c.checkpoint = r.str("checkpoint", c.checkpoint);
  c.grid = read_grid(r);
  c.M = r.integer("M", c.M);
  c.bandwidth = r.num("bandwidth", c.bandwidth);
  c.K = r.integer("K", c.K);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.M >= 1, "density.M must be >= 1");
  require_cfg(c.bandwidth > 0.0, "density.bandwidth must be positive");
  require_cfg(c.grid.resolution >= 2, "grid.resolution must be >= 2");
  return c;
}

std::string dump_density_config(const DensityConfig& c) {
  return JsonObj()
      .str("checkpoint", c.checkpoint)
      .field("grid", dump_grid(c.grid))
      .num("M", c.M)
      .num("bandwidth", c.bandwidth)
      .num("K", c.K)
      .num("run_seed", c.run_seed)
      .str();
}

UniquenessConfig parse_uniqueness_config(const std::string& text) {
  StrictReader r(parse_json(text, "uniqueness config"), "uniqueness");
  UniquenessConfig c;
  c.dataset = read_dataset(r);
  c.schedule = read_schedule(r);
  c.arch_a = read_arch(r, "arch_a");
  c.arch_b = read_arch(r, "arch_b");
  if (!r.has("arch_b")) c.arch_b.widths = {64, 64, 64, 64};
  c.init_seed_a = r.uinteger("init_seed_a", c.init_seed_a);
  c.init_seed_b = r.uinteger("init_seed_b", c.init_seed_b);
  c.epochs = r.integer("epochs", c.epochs);
  c.batch_size = r.integer("batch_size", c.batch_size);
  c.lr = r.num("lr", c.lr);
  c.n_seeds = r.integer("n_seeds", c.n_seeds);
  c.K = r.integer("K", c.K);
  c.run_seed = r.uinteger("run_seed", c.run_seed);
  r.finish();
  require_cfg(c.epochs >= 1, "uniqueness.epochs must be >= 1");
  require_cfg(c.n_seeds >= 2, "uniqueness.n_seeds must be >= 2");
  return c;
}

std::string dump_uniqueness_config(const UniquenessConfig& c) {
  return JsonObj()
      .field("dataset", dump_dataset(c.dataset))
      .field("schedule", dump_schedule(c.schedule))
      .field("arch_a", dump_arch(c.arch_a))
      .field("arch_b", dump_arch(c.arch_b))
      .num("init_seed_a", c.init_seed_a)
      .num("init_seed_b", c.init_seed_b)
      .num("epochs", c.epochs)
      .num("batch_size", c.batch_size)
      .num("lr", c.lr)
      .num("n_seeds", c.n_seeds)
      .num("K", c.K)
      .num("run_seed", c.run_seed)
      .str();
}

SchedulesConfig parse_schedules_config(const std::string& text) {
  StrictReader r(parse_json(text, "schedules config"), "schedules");
  SchedulesConfig c;
  c.T = r.integer("T", c.T);
  c.params.beta_min = r.num("beta_min", c.params.beta_min);
  c.params.beta_max = r.num("beta_max", c.params.beta_max);
  c.params.cosine_s = r.num("cosine_s", c.params.cosine_s);
  c.params.max_signal = r.num("max_signal", c.params.max_signal);
  c.params.min_signal = r.num("min_signal", c.params.min_signal);
  r.finish();
  return c;
}

std::string dump_schedules_config(const SchedulesConfig& c) {
  return JsonObj()
      .num("T", c.T)
      .num("beta_min", c.params.beta_min)
      .num("beta_max", c.params.beta_max)
      .num("cosine_s", c.params.cosine_s)
      .num("max_signal", c.params.max_signal)
      .num("min_signal", c.params.min_signal)
      .str();
}

GravProfileConfig parse_grav_profile_config(const std::string& text) {
  StrictReader r(parse_json(text, "gravprofile config"), "gravprofile");
  GravProfileConfig c;
  c.sigma = r.num("sigma", c.sigma);
  c.r_min = r.num("r_min", c.r_min);
  c.r_max = r.num("r_max", c.r_max);
  c.samples = r.integer("samples", c.samples);
  r.finish();
  return c;
}

std::string dump_grav_profile_config(const GravProfileConfig& c) {
  return JsonObj().num("sigma", c.sigma).num("r_min", c.r_min).num("r_max", c.r_max).num("samples", c.samples).str();
}

}  // namespace ddimlab
