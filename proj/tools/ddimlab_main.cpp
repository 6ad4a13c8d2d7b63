#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ddimlab/accept.hpp"
#include "ddimlab/commands.hpp"
#include "ddimlab/config.hpp"

namespace {

std::string read_config(const std::string& path) {
  if (path.empty()) return "{}";
  std::ifstream in(path);
  if (!in) throw ddimlab::ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddimlab: deterministic diffusion on 2D point datasets"};
  app.require_subcommand(1);

  std::string config_path;
  ddimlab::CmdOptions opt;
  bool no_timestamp = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--workers", opt.workers, "worker threads for batchable stages");
    sub->add_flag("--no-timestamp", no_timestamp, "omit the timestamp comment in SVG output");
  };

  CLI::App* train = app.add_subcommand("train", "train a denoiser and write a checkpoint");
  CLI::App* generate = app.add_subcommand("generate", "sample seeds and run reverse diffusion");
  CLI::App* gravmap = app.add_subcommand("gravmap", "map a latent grid through the generator");
  CLI::App* embed_gd = app.add_subcommand("embed-gd", "gradient-descent seed clouds for dataset targets");
  CLI::App* embed_net = app.add_subcommand("embed-net", "train an inverter network, then refine its seeds");
  CLI::App* pca = app.add_subcommand("pca", "principal components of a seed cloud");
  CLI::App* density = app.add_subcommand("density", "pushforward density heatmap of the generator");
  CLI::App* uniqueness = app.add_subcommand("uniqueness", "cross-model shared-seed comparison");
  CLI::App* schedules = app.add_subcommand("schedules", "export the four alpha schedules");
  CLI::App* gravprofile = app.add_subcommand("gravprofile", "weighted-attraction vs gravity curves");
  CLI::App* accept = app.add_subcommand("accept", "run the verification suite");

  for (CLI::App* sub : {train, generate, gravmap, embed_gd, embed_net, pca, density, uniqueness, schedules,
                        gravprofile, accept}) {
    add_common(sub);
  }
  std::string only_list;
  accept->add_option("--only", only_list, "comma-separated criterion ids to run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  opt.timestamp = !no_timestamp;

  try {
    const std::string cfg = read_config(config_path);
    if (train->parsed()) ddimlab::cmd_train(cfg, opt);
    if (generate->parsed()) ddimlab::cmd_generate(cfg, opt);
    if (gravmap->parsed()) ddimlab::cmd_gravmap(cfg, opt);
    if (embed_gd->parsed()) ddimlab::cmd_embed_gd(cfg, opt);
    if (embed_net->parsed()) ddimlab::cmd_embed_net(cfg, opt);
    if (pca->parsed()) ddimlab::cmd_pca(cfg, opt);
    if (density->parsed()) ddimlab::cmd_density(cfg, opt);
    if (uniqueness->parsed()) ddimlab::cmd_uniqueness(cfg, opt);
    if (schedules->parsed()) ddimlab::cmd_schedules(cfg, opt);
    if (gravprofile->parsed()) ddimlab::cmd_gravprofile(cfg, opt);
    if (accept->parsed()) {
      ddimlab::AcceptOptions aopt;
      aopt.out_dir = opt.out_dir == "out" ? "out/accept" : opt.out_dir;
      aopt.workers = opt.workers;
      if (!only_list.empty()) {
        std::stringstream ss(only_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) aopt.only.push_back(std::stoi(tok));
      }
      return ddimlab::cmd_accept(aopt);
    }
  } catch (const ddimlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
