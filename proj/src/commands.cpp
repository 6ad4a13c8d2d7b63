#include "ddimlab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "ddimlab/checkpoint.hpp"
#include "ddimlab/config.hpp"
#include "ddimlab/csv.hpp"
#include "ddimlab/embedding.hpp"
#include "ddimlab/rng.hpp"
#include "ddimlab/svg.hpp"

namespace ddimlab {

namespace {

namespace fs = std::filesystem;

std::string out_path(const CmdOptions& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  return (fs::path(opt.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text << "\n";
}

struct LoadedModel {
  Checkpoint ck;
  DenoiserNet net;
  NoiseSchedule schedule;
  PointSet dataset;  // regenerated from the checkpoint recipe
};

LoadedModel load_model(const std::string& checkpoint_path) {
  LoadedModel m;
  m.ck = load_checkpoint(checkpoint_path);
  m.net = denoiser_from_checkpoint(m.ck);
  m.schedule = build_schedule(m.ck.schedule);
  m.dataset = build_dataset(m.ck.dataset, m.ck.provenance.run_seed);
  return m;
}

Tensor gaussian_seeds(int n, int d, std::uint64_t run_seed, const char* tag) {
  RngStream rng(run_seed, tag);
  Tensor seeds({n, d});
  for (double& e : seeds.v) e = rng.gaussian();
  return seeds;
}

void write_loss_csv(const std::string& path, const TrainReport& report) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < report.epoch_loss.size(); ++i) {
    rows.push_back({static_cast<double>(i), report.epoch_loss[i]});
  }
  write_csv(path, {"epoch", "mean_loss"}, rows);
}

double dataset_extent(const PointSet& ps) {
  double m = 1.0;
  for (double e : ps.points.v) m = std::max(m, std::abs(e));
  return m;
}

void write_cloud_csv(const std::string& path, const SeedCloud& cloud) {
  std::vector<std::string> header;
  const int d = cloud.seeds.cols();
  for (int j = 0; j < d; ++j) header.push_back("z" + std::to_string(j));
  header.push_back("recon_error");
  header.push_back("aborted");
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < cloud.size(); ++i) {
    std::vector<double> row;
    for (int j = 0; j < d; ++j) row.push_back(cloud.seeds.at(i, j));
    row.push_back(cloud.recon_errors[static_cast<std::size_t>(i)]);
    row.push_back(cloud.aborted[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void cmd_train(const std::string& config_text, const CmdOptions& opt) {
  const TrainConfig cfg = parse_train_config(config_text);
  const PointSet dataset = build_dataset(cfg.dataset, cfg.run_seed);
  const NoiseSchedule schedule = build_schedule(cfg.schedule);

  DenoiserNet net = init_net(dataset.dim(), cfg.arch.widths, cfg.arch.embed, cfg.run_seed);

  TrainOptions topts;
  topts.epochs = cfg.epochs;
  topts.batch_size = cfg.batch_size;
  topts.adam = AdamParams{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps};
  topts.continuous_time = cfg.continuous_time;
  topts.lr_decay = cfg.lr_decay;
  const TrainReport report = train(net, dataset, schedule, topts, cfg.run_seed);

  Provenance prov{dataset.label, cfg.epochs, cfg.run_seed, report.final_loss};
  save_checkpoint(out_path(opt, "checkpoint.json"), checkpoint_from_denoiser(net, cfg.schedule, cfg.dataset, prov));
  write_loss_csv(out_path(opt, "loss.csv"), report);
  write_text(out_path(opt, "config.json"), dump_train_config(cfg));

  std::cout << "trained " << dataset.label << " for " << cfg.epochs << " epochs, final loss " << report.final_loss
            << "\n";
}

void cmd_generate(const std::string& config_text, const CmdOptions& opt) {
  const GenerateConfig cfg = parse_generate_config(config_text);
  const LoadedModel m = load_model(cfg.checkpoint);

  PointSet seeds;
  seeds.points = gaussian_seeds(cfg.n_seeds, m.net.dim, cfg.run_seed, "generate.seeds");
  seeds.label = "seeds";
  seeds.rng_seed = cfg.run_seed;

  BatchTrajectory traj;
  const PointSet outputs =
      generate_batch(m.net, m.schedule, seeds, cfg.K, opt.workers, cfg.emit_trajectories ? &traj : nullptr);

  write_pointset_csv(out_path(opt, "generated.csv"), outputs);
  write_pointset_csv(out_path(opt, "dataset.csv"), m.dataset);
  if (cfg.emit_trajectories) {
    std::vector<std::string> header{"row", "step_index", "t"};
    for (int j = 0; j < m.net.dim; ++j) header.push_back("x" + std::to_string(j));
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < outputs.size(); ++i) {
      for (std::size_t s = 0; s < traj.t.size(); ++s) {
        std::vector<double> row{static_cast<double>(i), static_cast<double>(s), static_cast<double>(traj.t[s])};
        for (int j = 0; j < m.net.dim; ++j) row.push_back(traj.x[s].at(i, j));
        rows.push_back(std::move(row));
      }
    }
    write_csv(out_path(opt, "trajectories.csv"), header, rows);
  }

  const double ext = std::max(dataset_extent(m.dataset), dataset_extent(outputs)) * 1.1;
  SvgCanvas svg(-ext, ext, -ext, ext, 640, 640, opt.timestamp);
  svg.scatter(m.dataset.points, 2.0, "blue", 0.5);
  svg.scatter(outputs.points, 2.0, "red", 0.8);
  svg.save(out_path(opt, "generate_scatter.svg"));
  write_text(out_path(opt, "config.json"), dump_generate_config(cfg));

  std::cout << "generated " << outputs.size() << " points with K=" << cfg.K << "\n";
}

void cmd_gravmap(const std::string& config_text, const CmdOptions& opt) {
  const GravmapConfig cfg = parse_gravmap_config(config_text);
  const LoadedModel m = load_model(cfg.checkpoint);

  const PointSet grid = gen_grid({{cfg.grid.lo, cfg.grid.hi}, {cfg.grid.lo, cfg.grid.hi}}, cfg.grid.resolution);
  const GravMap map = grav_map(m.net, m.schedule, m.dataset, grid, cfg.K, cfg.tau, opt.workers);

  std::vector<std::vector<double>> rows;
  for (int i = 0; i < grid.size(); ++i) {
    rows.push_back({grid.points.at(i, 0), grid.points.at(i, 1), map.outputs.points.at(i, 0),
                    map.outputs.points.at(i, 1), static_cast<double>(map.assignment[static_cast<std::size_t>(i)]),
                    map.distance[static_cast<std::size_t>(i)]});
  }
  write_csv(out_path(opt, "gravmap.csv"), {"gx", "gy", "ox", "oy", "assigned", "dist"}, rows);

  const double ext = std::max(std::abs(cfg.grid.lo), std::abs(cfg.grid.hi)) * 1.1;
  SvgCanvas svg(-ext, ext, -ext, ext, 720, 720, opt.timestamp);
  for (int i = 0; i < grid.size(); ++i) {
    svg.line(grid.points.at(i, 0), grid.points.at(i, 1), map.outputs.points.at(i, 0), map.outputs.points.at(i, 1),
             "#999999", 0.5, 0.5);
  }
  svg.scatter(grid.points, 1.2, "green", 0.7);
  svg.scatter(map.outputs.points, 1.5, "red", 0.8);
  svg.scatter(m.dataset.points, 1.8, "blue", 0.4);
  svg.save(out_path(opt, "gravmap.svg"));
  write_text(out_path(opt, "config.json"), dump_gravmap_config(cfg));

  int assigned = 0;
  for (int a : map.assignment) assigned += a >= 0 ? 1 : 0;
  std::cout << "gravmap: " << assigned << "/" << grid.size() << " seeds assigned within tau=" << cfg.tau << "\n";
}

void cmd_embed_gd(const std::string& config_text, const CmdOptions& opt) {
  const EmbedGdConfig cfg = parse_embed_gd_config(config_text);
  const LoadedModel m = load_model(cfg.checkpoint);

  Tensor targets;
  if (!cfg.targets_csv.empty()) {
    targets = read_pointset_csv(cfg.targets_csv).points;
  } else {
    RngStream rng(cfg.run_seed, "embed_gd.targets");
    const std::vector<int> perm = rng.permutation(m.dataset.size());
    const int count = std::min(cfg.targets, m.dataset.size());
    targets = Tensor({count, m.net.dim});
    for (int i = 0; i < count; ++i) {
      for (int j = 0; j < m.net.dim; ++j) targets.at(i, j) = m.dataset.points.at(perm[static_cast<std::size_t>(i)], j);
    }
  }

  EmbedGdOptions gopts{cfg.m, cfg.steps, cfg.lr, cfg.K};
  const std::vector<SeedCloud> clouds = embed_gd_batch(m.net, m.schedule, targets, gopts, cfg.run_seed, opt.workers);

  PointSet tset;
  tset.points = targets;
  write_pointset_csv(out_path(opt, "targets.csv"), tset);

  std::vector<std::vector<double>> summary;
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    char name[64];
    std::snprintf(name, sizeof(name), "cloud_%03zu.csv", c);
    write_cloud_csv(out_path(opt, name), clouds[c]);
    const double med = median(clouds[c].recon_errors);
    double mn = std::numeric_limits<double>::infinity();
    for (double e : clouds[c].recon_errors) mn = std::min(mn, e);
    summary.push_back({static_cast<double>(c), targets.at(static_cast<int>(c), 0), targets.at(static_cast<int>(c), 1),
                       med, mn});
  }
  write_csv(out_path(opt, "embed_gd_summary.csv"), {"target", "tx", "ty", "median_error", "min_error"}, summary);

  const double ext = dataset_extent(m.dataset) * 1.6;
  SvgCanvas svg(-ext, ext, -ext, ext, 720, 720, opt.timestamp);
  svg.scatter(m.dataset.points, 1.5, "blue", 0.25);
  for (const SeedCloud& cloud : clouds) svg.scatter(cloud.seeds, 1.5, "green", 0.7);
  svg.scatter(targets, 3.0, "red", 1.0);
  svg.save(out_path(opt, "embed_gd_clouds.svg"));
  write_text(out_path(opt, "config.json"), dump_embed_gd_config(cfg));

  std::vector<double> medians;
  for (const SeedCloud& c : clouds) medians.push_back(median(c.recon_errors));
  std::cout << "embed_gd: " << clouds.size() << " clouds, median of per-target median errors " << median(medians)
            << "\n";
}

void cmd_embed_net(const std::string& config_text, const CmdOptions& opt) {
  const EmbedNetConfig cfg = parse_embed_net_config(config_text);
  const LoadedModel m = load_model(cfg.checkpoint);

  Mlp enet = init_embed_net(m.net.dim, cfg.widths, cfg.run_seed);
  EmbedNetTrainOptions topts;
  topts.epochs = cfg.epochs;
  topts.batch_size = cfg.batch_size;
  topts.adam.lr = cfg.lr;
  topts.K = cfg.K;
  const TrainReport report = train_embed_net(enet, m.net, m.schedule, m.dataset, topts, cfg.run_seed);

  Provenance prov{m.dataset.label + ".inverter", cfg.epochs, cfg.run_seed, report.final_loss};
  save_checkpoint(out_path(opt, "embed_net_checkpoint.json"),
                  checkpoint_from_embed_net(enet, m.ck.schedule, m.ck.dataset, prov));
  write_loss_csv(out_path(opt, "embed_net_loss.csv"), report);

  // Probe reconstruction, then gradient refinement of each probe seed.
  RngStream rng(cfg.run_seed, "embednet.probes");
  const std::vector<int> perm = rng.permutation(m.dataset.size());
  const int probes = std::min(cfg.probes, m.dataset.size());

  std::vector<std::vector<double>> rows;
  double sum_net = 0.0, sum_before = 0.0, sum_after = 0.0;
  for (int p = 0; p < probes; ++p) {
    std::vector<double> x(static_cast<std::size_t>(m.net.dim));
    Tensor xb({1, m.net.dim});
    for (int j = 0; j < m.net.dim; ++j) {
      x[static_cast<std::size_t>(j)] = m.dataset.points.at(perm[static_cast<std::size_t>(p)], j);
      xb.at(0, j) = x[static_cast<std::size_t>(j)];
    }
    const Tensor z = mlp_forward(enet, xb);
    const Tensor recon = generate_batch(eps_from_net(m.net), m.schedule, z, cfg.K);
    double err_net = 0.0;
    for (int j = 0; j < m.net.dim; ++j) {
      const double e = recon.at(0, j) - x[static_cast<std::size_t>(j)];
      err_net += e * e;
    }

    std::vector<double> zrow(static_cast<std::size_t>(m.net.dim));
    for (int j = 0; j < m.net.dim; ++j) zrow[static_cast<std::size_t>(j)] = z.at(0, j);
    const RefineResult ref = refine_seed_gd(m.net, m.schedule, zrow, x, cfg.refine_steps, cfg.refine_lr, cfg.refine_K);

    sum_net += err_net;
    sum_before += ref.error_before;
    sum_after += ref.error_after;
    rows.push_back({static_cast<double>(p), x[0], x[1], err_net, ref.error_before, ref.error_after});
  }
  write_csv(out_path(opt, "embed_net_report.csv"),
            {"probe", "x0", "x1", "err_net", "err_before_refine", "err_after_refine"}, rows);
  write_text(out_path(opt, "config.json"), dump_embed_net_config(cfg));

  std::cout << "embed_net: final train loss " << report.final_loss << ", mean probe error " << sum_net / probes
            << " (K=" << cfg.K << "), refine " << sum_before / probes << " -> " << sum_after / probes
            << " (K=" << cfg.refine_K << ")\n";
}

void cmd_pca(const std::string& config_text, const CmdOptions& opt) {
  const PcaConfig cfg = parse_pca_config(config_text);
  const CsvTable table = read_csv(cfg.cloud_csv);
  if (table.header.size() < 2) throw ConfigError("pca: cloud csv needs z columns");
  int d = 0;
  while (d < static_cast<int>(table.header.size()) && table.header[static_cast<std::size_t>(d)] == "z" + std::to_string(d)) {
    ++d;
  }
  if (d < 1) throw ConfigError("pca: cloud csv must start with z0,z1,...");

  Tensor seeds({static_cast<int>(table.rows.size()), d});
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (int j = 0; j < d; ++j) seeds.at(static_cast<int>(i), j) = table.rows[i][static_cast<std::size_t>(j)];
  }

  const PcaResult pca = pca_points(seeds);

  std::vector<std::string> header{"component", "eigenvalue"};
  for (int j = 0; j < d; ++j) header.push_back("v" + std::to_string(j));
  std::vector<std::vector<double>> rows;
  {
    // component -1 row carries the cloud mean
    std::vector<double> mean_row{-1.0, 0.0};
    for (int j = 0; j < d; ++j) mean_row.push_back(pca.mean[static_cast<std::size_t>(j)]);
    rows.push_back(std::move(mean_row));
  }
  for (int c = 0; c < d; ++c) {
    std::vector<double> row{static_cast<double>(c), pca.eigenvalues[static_cast<std::size_t>(c)]};
    for (int j = 0; j < d; ++j) row.push_back(pca.components.at(c, j));
    rows.push_back(std::move(row));
  }
  write_csv(out_path(opt, "pca.csv"), header, rows);

  if (!cfg.traverse_factors.empty()) {
    if (cfg.checkpoint.empty()) throw ConfigError("pca: traversal needs a checkpoint");
    const LoadedModel m = load_model(cfg.checkpoint);
    SeedCloud cloud;
    cloud.seeds = seeds;
    cloud.target = Tensor({1, d});
    cloud.meta.K = cfg.K;
    const Tensor outs = traverse_component(m.net, m.schedule, cloud, pca, cfg.component, cfg.traverse_factors, cfg.K);
    std::vector<std::string> th{"factor"};
    for (int j = 0; j < d; ++j) th.push_back("x" + std::to_string(j));
    std::vector<std::vector<double>> trows;
    for (std::size_t i = 0; i < cfg.traverse_factors.size(); ++i) {
      std::vector<double> row{cfg.traverse_factors[i]};
      for (int j = 0; j < d; ++j) row.push_back(outs.at(static_cast<int>(i), j));
      trows.push_back(std::move(row));
    }
    write_csv(out_path(opt, "pca_traversal.csv"), th, trows);
  }

  if (d == 2) {
    double ext = 1.0;
    for (double e : seeds.v) ext = std::max(ext, std::abs(e) * 1.2);
    SvgCanvas svg(-ext, ext, -ext, ext, 640, 640, opt.timestamp);
    svg.scatter(seeds, 2.0, "green", 0.7);
    for (int c = 0; c < d; ++c) {
      const double len = 2.0 * std::sqrt(std::max(pca.eigenvalues[static_cast<std::size_t>(c)], 1e-12));
      svg.line(pca.mean[0] - len * pca.components.at(c, 0), pca.mean[1] - len * pca.components.at(c, 1),
               pca.mean[0] + len * pca.components.at(c, 0), pca.mean[1] + len * pca.components.at(c, 1),
               c == 0 ? "red" : "orange", 2.0);
    }
    svg.save(out_path(opt, "pca.svg"));
  }
  write_text(out_path(opt, "config.json"), dump_pca_config(cfg));

  std::cout << "pca: eigenvalues";
  for (double e : pca.eigenvalues) std::cout << " " << e;
  std::cout << "\n";
}

void cmd_density(const std::string& config_text, const CmdOptions& opt) {
  const DensityConfig cfg = parse_density_config(config_text);
  const LoadedModel m = load_model(cfg.checkpoint);

  GridSpec grid;
  grid.bounds = {{cfg.grid.lo, cfg.grid.hi}, {cfg.grid.lo, cfg.grid.hi}};
  grid.resolution = cfg.grid.resolution;
  const DensityResult res =
      pushforward_density(m.net, m.schedule, grid, cfg.M, cfg.bandwidth, cfg.K, cfg.run_seed, opt.workers);

  std::vector<std::vector<double>> rows;
  for (int i = 0; i < res.grid.size(); ++i) {
    rows.push_back({res.grid.points.at(i, 0), res.grid.points.at(i, 1), res.density[static_cast<std::size_t>(i)]});
  }
  write_csv(out_path(opt, "density.csv"), {"x", "y", "density"}, rows);

  double dmax = 0.0, mass = 0.0;
  for (double e : res.density) {
    dmax = std::max(dmax, e);
    mass += e * res.cell_area;
  }
  const double cell = (cfg.grid.hi - cfg.grid.lo) / (cfg.grid.resolution - 1);
  SvgCanvas svg(cfg.grid.lo, cfg.grid.hi, cfg.grid.lo, cfg.grid.hi, 720, 720, opt.timestamp);
  for (int i = 0; i < res.grid.size(); ++i) {
    const double v = res.density[static_cast<std::size_t>(i)] / dmax;
    if (v <= 0.003) continue;
    svg.cell(res.grid.points.at(i, 0) - cell / 2, res.grid.points.at(i, 1) - cell / 2, cell, cell,
             heat_color(std::sqrt(v)));
  }
  svg.save(out_path(opt, "density.svg"));
  write_text(out_path(opt, "config.json"), dump_density_config(cfg));

  std::cout << "density: grid integral " << mass << ", max cell density " << dmax << "\n";
}

void cmd_uniqueness(const std::string& config_text, const CmdOptions& opt) {
  const UniquenessConfig cfg = parse_uniqueness_config(config_text);
  if (cfg.arch_a.widths == cfg.arch_b.widths && cfg.init_seed_a == cfg.init_seed_b) {
    throw ConfigError("uniqueness: the two architectures must differ in widths or init seed");
  }
  const PointSet dataset = build_dataset(cfg.dataset, cfg.run_seed);
  const NoiseSchedule schedule = build_schedule(cfg.schedule);

  ArchSpec a{cfg.arch_a.widths, cfg.arch_a.embed, cfg.init_seed_a};
  ArchSpec b{cfg.arch_b.widths, cfg.arch_b.embed, cfg.init_seed_b};
  TrainOptions topts;
  topts.epochs = cfg.epochs;
  topts.batch_size = cfg.batch_size;
  topts.adam.lr = cfg.lr;

  const Tensor seeds = gaussian_seeds(cfg.n_seeds, dataset.dim(), cfg.run_seed, "uniqueness.seeds");
  const UniquenessReport rep =
      uniqueness_experiment(dataset, schedule, a, b, seeds, topts, cfg.K, cfg.run_seed, opt.workers);

  write_csv(out_path(opt, "uniqueness.csv"), {"d_pair", "d_rand", "ratio"}, {{rep.d_pair, rep.d_rand, rep.ratio}});

  const double ext = dataset_extent(dataset) * 1.3;
  SvgCanvas svg(-ext, ext, -ext, ext, 720, 720, opt.timestamp);
  for (int i = 0; i < rep.out_a.rows(); ++i) {
    svg.line(rep.out_a.at(i, 0), rep.out_a.at(i, 1), rep.out_b.at(i, 0), rep.out_b.at(i, 1), "#999999", 0.6, 0.6);
  }
  svg.scatter(dataset.points, 1.5, "blue", 0.2);
  svg.scatter(rep.out_a, 2.0, "red", 0.8);
  svg.scatter(rep.out_b, 2.0, "green", 0.8);
  svg.save(out_path(opt, "uniqueness.svg"));
  write_text(out_path(opt, "config.json"), dump_uniqueness_config(cfg));

  std::cout << "uniqueness: D_pair " << rep.d_pair << ", D_rand " << rep.d_rand << ", ratio " << rep.ratio << "\n";
}

void cmd_schedules(const std::string& config_text, const CmdOptions& opt) {
  const SchedulesConfig cfg = parse_schedules_config(config_text);
  const NoiseSchedule lin = make_schedule(ScheduleKind::Linear, cfg.T, cfg.params);
  const NoiseSchedule quad = make_schedule(ScheduleKind::Quadratic, cfg.T, cfg.params);
  const NoiseSchedule cos = make_schedule(ScheduleKind::Cosine, cfg.T, cfg.params);
  const NoiseSchedule ccos = make_schedule(ScheduleKind::ContinuousCosine, cfg.T, cfg.params);

  std::vector<std::vector<double>> rows;
  for (int t = 0; t <= cfg.T; ++t) {
    rows.push_back({static_cast<double>(t), lin.alpha_at(t), quad.alpha_at(t), cos.alpha_at(t), ccos.alpha_at(t)});
  }
  write_csv(out_path(opt, "schedules.csv"), {"t", "linear", "quadratic", "cosine", "continuous_cosine"}, rows);

  SvgCanvas svg(0.0, static_cast<double>(cfg.T), -0.02, 1.02, 720, 480, opt.timestamp);
  const auto curve = [&](const NoiseSchedule& s, const std::string& color) {
    std::vector<std::pair<double, double>> pts;
    for (int t = 0; t <= cfg.T; ++t) pts.emplace_back(static_cast<double>(t), s.alpha_at(t));
    svg.polyline(pts, color, 1.8);
  };
  curve(lin, "red");
  curve(quad, "orange");
  curve(cos, "green");
  curve(ccos, "blue");
  svg.text(cfg.T * 0.70, 0.95, "linear: red  quadratic: orange", 12);
  svg.text(cfg.T * 0.70, 0.88, "cosine: green  continuous: blue", 12);
  svg.save(out_path(opt, "schedules.svg"));
  write_text(out_path(opt, "config.json"), dump_schedules_config(cfg));

  std::cout << "schedules: alpha_T linear " << lin.alpha_at(cfg.T) << ", quadratic " << quad.alpha_at(cfg.T)
            << ", cosine " << cos.alpha_at(cfg.T) << ", continuous " << ccos.alpha_at(cfg.T) << "\n";
}

void cmd_gravprofile(const std::string& config_text, const CmdOptions& opt) {
  const GravProfileConfig cfg = parse_grav_profile_config(config_text);
  if (cfg.samples < 2) throw ConfigError("gravprofile: samples must be >= 2");
  std::vector<double> r(static_cast<std::size_t>(cfg.samples));
  for (int i = 0; i < cfg.samples; ++i) {
    r[static_cast<std::size_t>(i)] = cfg.r_min + (cfg.r_max - cfg.r_min) * static_cast<double>(i) / (cfg.samples - 1);
  }
  const GravProfile prof = grav_profile(cfg.sigma, r);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.size(); ++i) rows.push_back({r[i], prof.weighted[i], prof.gravity[i]});
  write_csv(out_path(opt, "gravprofile.csv"), {"r", "weighted_attraction", "gravity"}, rows);

  double ymax = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) ymax = std::max({ymax, prof.weighted[i], prof.gravity[i]});
  SvgCanvas svg(0.0, cfg.r_max, 0.0, ymax * 1.05, 720, 480, opt.timestamp);
  std::vector<std::pair<double, double>> wpts, gpts;
  for (std::size_t i = 0; i < r.size(); ++i) {
    wpts.emplace_back(r[i], prof.weighted[i]);
    gpts.emplace_back(r[i], prof.gravity[i]);
  }
  svg.polyline(gpts, "orange", 2.0);
  svg.polyline(wpts, "blue", 2.0);
  svg.text(cfg.r_max * 0.6, ymax * 0.95, "gravity: orange  weighted: blue", 12);
  svg.save(out_path(opt, "gravprofile.svg"));
  write_text(out_path(opt, "config.json"), dump_grav_profile_config(cfg));

  std::cout << "gravprofile: curves written for sigma " << cfg.sigma << "\n";
}

}  // namespace ddimlab
