#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ddimlab/checkpoint.hpp"
#include "ddimlab/commands.hpp"
#include "ddimlab/config.hpp"
#include "ddimlab/csv.hpp"
#include "ddimlab/rng.hpp"
#include "ddimlab/svg.hpp"

using namespace ddimlab;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ddimlab_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTinyTrain = R"({
  "dataset": {"kind": "two-moons", "n": 64},
  "schedule": {"T": 100},
  "arch": {"widths": [8, 8], "embed": {"L": 4}},
  "epochs": 2, "batch_size": 16, "run_seed": 77
})";

}  // namespace

TEST_CASE("csv values survive a write/read round trip bitwise") {
  const fs::path dir = scratch_dir("csv");
  RngStream rng(1, "test.csv");
  PointSet ps;
  ps.points = Tensor({17, 2});
  for (double& e : ps.points.v) e = rng.gaussian() * 1e3;
  ps.points.v[0] = 0.1;  // not exactly representable, exercises 17-digit output

  const fs::path file = dir / "points.csv";
  write_pointset_csv(file.string(), ps);
  const PointSet back = read_pointset_csv(file.string());
  REQUIRE(back.size() == ps.size());
  for (std::size_t i = 0; i < ps.points.v.size(); ++i) CHECK(back.points.v[i] == ps.points.v[i]);

  CHECK_THROWS_AS(read_pointset_csv((dir / "missing.csv").string()), std::runtime_error);
}

TEST_CASE("config parsing: defaults, strictness, persisted run seed") {
  const TrainConfig c = parse_train_config("{}");
  CHECK(c.epochs == 400);
  CHECK(c.arch.widths == std::vector<int>{128, 128, 128});
  CHECK(c.dataset.kind == "two-moons");

  CHECK_THROWS_AS(parse_train_config("{\"no_such\": 1}"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("{\"dataset\": {\"zzz\": 1}}"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("{\"epochs\": \"ten\"}"), ConfigError);

  const std::string dumped = dump_train_config(c);
  CHECK(dumped.find("\"run_seed\":1234") != std::string::npos);
  const TrainConfig back = parse_train_config(dumped);
  CHECK(back.epochs == c.epochs);
  CHECK(back.lr == c.lr);
  CHECK(dump_train_config(back) == dumped);
}

TEST_CASE("checkpoint round trip is bitwise and version mismatch is fatal") {
  const DenoiserNet net = init_net(2, {6, 5}, SinusoidalEmbedConfig{4, 1.0, 10.0}, 99);
  ScheduleSpec sched;
  DatasetSpec data;
  Provenance prov{"two-moons", 3, 42, 0.125};
  const Checkpoint ck = checkpoint_from_denoiser(net, sched, data, prov);

  const fs::path dir = scratch_dir("ckpt");
  const fs::path file = dir / "checkpoint.json";
  save_checkpoint(file.string(), ck);

  const Checkpoint loaded = load_checkpoint(file.string());
  const DenoiserNet back = denoiser_from_checkpoint(loaded);
  CHECK(params_hash(back.mlp) == params_hash(net.mlp));
  CHECK(loaded.provenance.run_seed == 42);
  CHECK(loaded.provenance.final_loss == 0.125);

  // resave reproduces the bytes exactly
  const fs::path file2 = dir / "again.json";
  save_checkpoint(file2.string(), loaded);
  CHECK(slurp(file) == slurp(file2));

  // corrupt the version field
  std::string text = slurp(file);
  const auto pos = text.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "\"format_version\":9");
  CHECK_THROWS_WITH_AS(parse_checkpoint(text), doctest::Contains("format_version"), std::runtime_error);

  // flip one parameter byte: the document still parses but the parameters differ
  CHECK_THROWS_AS(parse_checkpoint("{\"format_version\": 1}"), std::runtime_error);
}

TEST_CASE("embednet checkpoints reload through the same surface") {
  RngStream rng(5, "test.embednet.ck");
  const Mlp enet = init_mlp(2, 2, {7, 7}, Activation::Silu, rng);
  const Checkpoint ck = checkpoint_from_embed_net(enet, ScheduleSpec{}, DatasetSpec{}, Provenance{"inv", 1, 2, 0.5});
  const fs::path dir = scratch_dir("embednet");
  save_checkpoint((dir / "e.json").string(), ck);
  const Mlp back = embed_net_from_checkpoint(load_checkpoint((dir / "e.json").string()));
  CHECK(params_hash(back) == params_hash(enet));
  CHECK_THROWS_AS(denoiser_from_checkpoint(ck), std::runtime_error);
}

TEST_CASE("cmd_train twice produces byte-identical checkpoints; lr=0 equals init") {
  const fs::path dir1 = scratch_dir("train1");
  const fs::path dir2 = scratch_dir("train2");
  CmdOptions opt1{dir1.string(), 1, false};
  CmdOptions opt2{dir2.string(), 1, false};
  cmd_train(kTinyTrain, opt1);
  cmd_train(kTinyTrain, opt2);
  CHECK(slurp(dir1 / "checkpoint.json") == slurp(dir2 / "checkpoint.json"));
  CHECK(slurp(dir1 / "loss.csv") == slurp(dir2 / "loss.csv"));

  // zero learning rate reproduces the init parameters exactly
  const fs::path dir3 = scratch_dir("train3");
  std::string zerocfg = R"({
    "dataset": {"kind": "two-moons", "n": 64},
    "schedule": {"T": 100},
    "arch": {"widths": [8, 8], "embed": {"L": 4}},
    "epochs": 1, "batch_size": 16, "lr": 0.0, "run_seed": 77
  })";
  CmdOptions opt3{dir3.string(), 1, false};
  cmd_train(zerocfg, opt3);
  const Checkpoint ck = load_checkpoint((dir3 / "checkpoint.json").string());
  const DenoiserNet loaded = denoiser_from_checkpoint(ck);
  const DenoiserNet fresh = init_net(2, {8, 8}, SinusoidalEmbedConfig{4, 1.0, 1000.0}, 77);
  CHECK(params_hash(loaded.mlp) == params_hash(fresh.mlp));
}

TEST_CASE("cmd_generate: n_seeds=0 writes a header-only csv; fixed seed reruns byte-identically") {
  const fs::path tdir = scratch_dir("gentrain");
  CmdOptions topt{tdir.string(), 1, false};
  cmd_train(kTinyTrain, topt);

  const std::string genzero = std::string("{\"checkpoint\": \"") + (tdir / "checkpoint.json").string() +
                              "\", \"n_seeds\": 0, \"K\": 5, \"run_seed\": 3}";
  const fs::path gdir0 = scratch_dir("gen0");
  CmdOptions gopt0{gdir0.string(), 1, false};
  cmd_generate(genzero, gopt0);
  CHECK(slurp(gdir0 / "generated.csv") == "x0,x1\n");

  const std::string gen = std::string("{\"checkpoint\": \"") + (tdir / "checkpoint.json").string() +
                          "\", \"n_seeds\": 8, \"K\": 5, \"run_seed\": 3}";
  const fs::path gdir1 = scratch_dir("gen1");
  const fs::path gdir2 = scratch_dir("gen2");
  CmdOptions gopt1{gdir1.string(), 1, false};
  CmdOptions gopt2{gdir2.string(), 1, false};
  cmd_generate(gen, gopt1);
  cmd_generate(gen, gopt2);
  CHECK(slurp(gdir1 / "generated.csv") == slurp(gdir2 / "generated.csv"));
  CHECK(slurp(gdir1 / "generate_scatter.svg") == slurp(gdir2 / "generate_scatter.svg"));
}

TEST_CASE("svg canvas emits the primitives it was asked for") {
  SvgCanvas svg(-1.0, 1.0, -1.0, 1.0, 100, 100, false);
  svg.circle(0.0, 0.0, 2.0, "red");
  svg.line(-1.0, -1.0, 1.0, 1.0, "blue", 1.0);
  svg.cell(0.0, 0.0, 0.5, 0.5, "#336699");
  svg.polyline({{-1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}}, "green");
  const std::string s = svg.str();
  CHECK(s.find("<circle") != std::string::npos);
  CHECK(s.find("<line") != std::string::npos);
  CHECK(s.find("<rect") != std::string::npos);
  CHECK(s.find("<polyline") != std::string::npos);
  CHECK(s.find("generated") == std::string::npos);  // timestamp suppressed
  CHECK(s.find("</svg>") != std::string::npos);
}

TEST_CASE("format_value survives round trips on awkward doubles") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 4e-4}) {
    const std::string s = format_value(x);
    CHECK(std::stod(s) == x);
  }
}
