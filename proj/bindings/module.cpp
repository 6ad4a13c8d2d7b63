#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ddimlab/checkpoint.hpp"
#include "ddimlab/config.hpp"
#include "ddimlab/datasets.hpp"
#include "ddimlab/denoiser.hpp"
#include "ddimlab/diffusion.hpp"
#include "ddimlab/embedding.hpp"
#include "ddimlab/schedule.hpp"

namespace py = pybind11;
using namespace ddimlab;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  const auto info = arr.request();
  if (info.ndim != 2) throw std::invalid_argument("expected a 2D array");
  Tensor t({static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1])});
  const double* src = static_cast<const double*>(info.ptr);
  std::copy(src, src + t.v.size(), t.v.begin());
  return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  if (t.ndim() != 2) throw std::invalid_argument("expected a 2D tensor");
  py::array_t<double> arr({t.shape[0], t.shape[1]});
  std::copy(t.v.begin(), t.v.end(), static_cast<double*>(arr.request().ptr));
  return arr;
}

}  // namespace

PYBIND11_MODULE(_ddimlab, m) {
  m.doc() = "deterministic diffusion lab for 2D point datasets";

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_property_readonly("kind", [](const NoiseSchedule& s) { return std::string(schedule_kind_name(s.kind)); })
      .def_readonly("T", &NoiseSchedule::T)
      .def_property_readonly("alpha", [](const NoiseSchedule& s) { return s.alpha; })
      .def("alpha_at", &NoiseSchedule::alpha_at)
      .def("rates_at", &NoiseSchedule::rates_at)
      .def("alpha_continuous", &NoiseSchedule::alpha_continuous);

  m.def(
      "make_schedule",
      [](const std::string& kind, int T, double beta_min, double beta_max, double cosine_s, double max_signal,
         double min_signal) {
        ScheduleParams p{beta_min, beta_max, cosine_s, max_signal, min_signal};
        return make_schedule(schedule_kind_from_name(kind), T, p);
      },
      py::arg("kind") = "continuous-cosine", py::arg("T") = 1000, py::arg("beta_min") = 1e-4,
      py::arg("beta_max") = 0.02, py::arg("cosine_s") = 0.008, py::arg("max_signal") = 0.95,
      py::arg("min_signal") = 0.02);

  m.def("subsequence", [](const NoiseSchedule& s, int K) { return subsequence(s, K); });

  m.def(
      "two_moons",
      [](int n, double noise_std, std::uint64_t seed) { return array_from_tensor(gen_two_moons(n, noise_std, seed).points); },
      py::arg("n"), py::arg("noise_std") = 0.05, py::arg("seed") = 0);
  m.def(
      "circles",
      [](int n, const std::vector<double>& radii, double noise_std, std::uint64_t seed) {
        return array_from_tensor(gen_circles(n, radii, noise_std, seed).points);
      },
      py::arg("n"), py::arg("radii") = std::vector<double>{1.0, 0.5}, py::arg("noise_std") = 0.05,
      py::arg("seed") = 0);
  m.def(
      "blobs",
      [](int n, const std::vector<std::vector<double>>& centers, double cluster_std, std::uint64_t seed) {
        return array_from_tensor(gen_blobs(n, centers, cluster_std, seed).points);
      },
      py::arg("n"), py::arg("centers"), py::arg("cluster_std") = 0.3, py::arg("seed") = 0);
  m.def(
      "grid",
      [](double lo, double hi, int resolution) {
        return array_from_tensor(gen_grid({{lo, hi}, {lo, hi}}, resolution).points);
      },
      py::arg("lo") = -3.0, py::arg("hi") = 3.0, py::arg("resolution") = 61);
  m.def("normalize", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts) {
    PointSet ps;
    ps.points = tensor_from_array(pts);
    auto [norm, tf] = normalize(ps);
    return py::make_tuple(array_from_tensor(norm.points), tf.mean, tf.scale);
  });

  m.def("sinusoidal_embed", [](int L, double min_freq, double max_freq, double v) {
    return sinusoidal_embed(SinusoidalEmbedConfig{L, min_freq, max_freq}, v);
  });

  m.def("grav_weight", &grav_weight, py::arg("z"), py::arg("x"), py::arg("sigma"), py::arg("l1_distance") = false);

  py::class_<DenoiserNet>(m, "DenoiserNet")
      .def_readonly("dim", &DenoiserNet::dim)
      .def_property_readonly("widths", [](const DenoiserNet& n) { return n.mlp.widths; })
      .def_property_readonly("param_count", [](const DenoiserNet& n) { return n.mlp.param_count(); });

  m.def(
      "init_net",
      [](int d, const std::vector<int>& widths, int L, double min_freq, double max_freq, std::uint64_t seed) {
        return init_net(d, widths, SinusoidalEmbedConfig{L, min_freq, max_freq}, seed);
      },
      py::arg("d") = 2, py::arg("widths") = std::vector<int>{128, 128, 128}, py::arg("L") = 32,
      py::arg("min_freq") = 1.0, py::arg("max_freq") = 1000.0, py::arg("seed") = 0);

  m.def(
      "train",
      [](DenoiserNet& net, const py::array_t<double, py::array::c_style | py::array::forcecast>& data,
         const NoiseSchedule& schedule, int epochs, int batch_size, double lr, std::uint64_t seed) {
        PointSet ds;
        ds.points = tensor_from_array(data);
        ds.label = "python";
        TrainOptions opts;
        opts.epochs = epochs;
        opts.batch_size = batch_size;
        opts.adam.lr = lr;
        const TrainReport rep = train(net, ds, schedule, opts, seed);
        return rep.epoch_loss;
      },
      py::arg("net"), py::arg("data"), py::arg("schedule"), py::arg("epochs") = 10, py::arg("batch_size") = 64,
      py::arg("lr") = 1e-3, py::arg("seed") = 0);

  m.def("predict_eps",
        [](const DenoiserNet& net, const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const std::vector<double>& alpha) { return array_from_tensor(predict_eps(net, tensor_from_array(x), alpha)); });

  m.def(
      "diffuse",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x0, const std::vector<double>& alpha,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& eps) {
        return array_from_tensor(diffuse_alpha(tensor_from_array(x0), alpha, tensor_from_array(eps)));
      },
      py::arg("x0"), py::arg("alpha"), py::arg("eps"));

  m.def(
      "estimate_x0",
      [](const DenoiserNet& net, const py::array_t<double, py::array::c_style | py::array::forcecast>& x_t,
         double alpha_t) { return array_from_tensor(estimate_x0(eps_from_net(net), tensor_from_array(x_t), alpha_t)); },
      py::arg("net"), py::arg("x_t"), py::arg("alpha_t"));

  m.def(
      "generate",
      [](const DenoiserNet& net, const NoiseSchedule& schedule,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& seeds, int K, int workers) {
        return array_from_tensor(generate_batch(eps_from_net(net), schedule, tensor_from_array(seeds), K, workers));
      },
      py::arg("net"), py::arg("schedule"), py::arg("seeds"), py::arg("K") = 25, py::arg("workers") = 1);

  m.def(
      "embed_gd",
      [](const DenoiserNet& net, const NoiseSchedule& schedule, const std::vector<double>& target, int m_seeds,
         int steps, double lr, int K, std::uint64_t seed) {
        EmbedGdOptions opts{m_seeds, steps, lr, K};
        const SeedCloud cloud = embed_gd(net, schedule, target, opts, seed);
        return py::make_tuple(array_from_tensor(cloud.seeds), cloud.recon_errors);
      },
      py::arg("net"), py::arg("schedule"), py::arg("target"), py::arg("m") = 16, py::arg("steps") = 200,
      py::arg("lr") = 0.02, py::arg("K") = 25, py::arg("seed") = 0);

  m.def("pca", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts) {
    const PcaResult res = pca_points(tensor_from_array(pts));
    return py::make_tuple(res.mean, array_from_tensor(res.components), res.eigenvalues);
  });

  m.def("save_denoiser", [](const std::string& path, const DenoiserNet& net) {
    save_checkpoint(path, checkpoint_from_denoiser(net, ScheduleSpec{}, DatasetSpec{}, Provenance{}));
  });
  m.def("load_denoiser", [](const std::string& path) {
    const Checkpoint ck = load_checkpoint(path);
    return py::make_tuple(denoiser_from_checkpoint(ck), build_schedule(ck.schedule));
  });
}
