// Python bindings.  JSON documents cross the boundary as Python dicts via the
// json module, matrices as numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kgam/checkpoint.hpp"
#include "kgam/config.hpp"
#include "kgam/datasets.hpp"
#include "kgam/embedding.hpp"
#include "kgam/errors.hpp"
#include "kgam/io.hpp"
#include "kgam/koppen.hpp"
#include "kgam/pipeline.hpp"
#include "kgam/smoothers.hpp"

namespace py = pybind11;
using namespace kgam;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  if (py::isinstance<py::str>(o)) return nlohmann::json::parse(o.cast<std::string>());
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

KstParams params_for(int d, int gamma, int k, std::optional<int> n_beta) {
  KstOptions o;
  o.d = d;
  o.gamma = gamma;
  o.k_digits = k;
  o.n_beta = n_beta;
  return make_kst_params(o);
}

py::tuple xy(const Dataset& d) { return py::make_tuple(d.X, d.y); }

// A trained or loaded model plus what is needed to save it again.
struct PyModel {
  Checkpoint checkpoint;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const { return predict_batch(checkpoint.model, X); }
  Eigen::MatrixXd embed(const Eigen::MatrixXd& X) const { return embed_rows(checkpoint.model, X); }
  Eigen::VectorXd outer(int channel, const std::vector<double>& z) const {
    return outer_eval(checkpoint.model, channel, z).transpose();
  }
};

}  // namespace

PYBIND11_MODULE(pykgam, m) {
  m.doc() = "Kolmogorov-GAM core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "psi",
      [](const std::vector<double>& x, int gamma, int k, int n_beta) {
        const KoppenFunction f(gamma, n_beta, k);
        return koppen_psi_batch(x, f);
      },
      py::arg("x"), py::arg("gamma") = 10, py::arg("k") = 6, py::arg("n_beta") = 1,
      "Truncated Koppen inner function at each x in [0, 1].");

  m.def(
      "psi_series",
      [](int gamma, int k, int n_beta, int grid, double lo, double hi) {
        const auto s = psi_series(params_for(1, gamma, k, n_beta), grid, lo, hi);
        std::vector<double> xs, ys;
        for (const auto& p : s) {
          xs.push_back(p.x);
          ys.push_back(p.psi);
        }
        return py::make_tuple(xs, ys);
      },
      py::arg("gamma") = 10, py::arg("k") = 3, py::arg("n_beta") = 2, py::arg("grid") = 1001,
      py::arg("lo") = 0.0, py::arg("hi") = 1.0);

  m.def(
      "embed",
      [](const Eigen::MatrixXd& X, int gamma, int k) {
        const KstParams p = params_for(static_cast<int>(X.cols()), gamma, k, std::nullopt);
        return embed_batch(X, fit_normalizer(X, p), p);
      },
      py::arg("X"), py::arg("gamma") = 10, py::arg("k") = 6,
      "Normalise the columns of X on X itself, then return the rows x (2d+1) embedding.");

  m.def(
      "friedman", [](std::size_t n, std::uint64_t seed, double noise) { return xy(friedman_generate(n, seed, noise)); },
      py::arg("n") = 100, py::arg("seed") = 42, py::arg("noise_sd") = 1.0);
  m.def(
      "iris", [](const std::filesystem::path& path) { return xy(iris_binarize(iris_load(path))); }, py::arg("path"),
      "Binarized Iris: three features and 1{sepal length > mean}.");
  m.def(
      "split_indices",
      [](std::size_t n_rows, std::size_t train_n, std::uint64_t seed) {
        Dataset d;
        d.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), 1);
        d.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_rows));
        const Dataset s = split(d, train_n, seed);
        return py::make_tuple(s.train_idx, s.test_idx);
      },
      py::arg("n_rows"), py::arg("train_n"), py::arg("seed"));

  py::class_<PyModel>(m, "Model")
      .def("predict", &PyModel::predict, py::arg("X"))
      .def("embed", &PyModel::embed, py::arg("X"))
      .def("outer", &PyModel::outer, py::arg("channel"), py::arg("z"))
      .def_property_readonly("channels", [](const PyModel& p) { return p.checkpoint.model.channels(); })
      .def_property_readonly("loss_trace", [](const PyModel& p) { return p.checkpoint.loss_trace; })
      .def_property_readonly("initial_loss", [](const PyModel& p) { return p.checkpoint.initial_loss; })
      .def_property_readonly("metrics", [](const PyModel& p) { return to_py(p.checkpoint.metrics); })
      .def_property_readonly("config", [](const PyModel& p) { return to_py(p.checkpoint.config); })
      .def("save", [](const PyModel& p, const std::filesystem::path& path) { save_checkpoint(path, p.checkpoint); });

  m.def(
      "train",
      [](const py::object& config) {
        RunConfig c = run_config_from_json(from_py(config));
        apply_env_overrides(c);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_training(c);
        }
        return PyModel{make_checkpoint(c, r)};
      },
      py::arg("config"), "Train from a config dict (or JSON string) and return the model.");
  m.def(
      "load", [](const std::filesystem::path& path) { return PyModel{load_checkpoint(path)}; }, py::arg("path"));
  m.def(
      "resolve_config", [](const py::object& config) { return to_py(run_config_to_json(run_config_from_json(from_py(config)))); },
      py::arg("config"));

  m.def(
      "glm",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
        return to_py(glm_to_json(glm_fit(X, y, names)));
      },
      py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{},
      "Logistic regression by IRLS; returns coefficients, log-likelihood, AIC and BIC.");
  m.def("attention", &attention, py::arg("Q"), py::arg("K"), py::arg("V"));
  m.def(
      "nadaraya_watson",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& query, const std::string& kernel,
         double bandwidth) {
        KernelKind kind;
        if (kernel == "gaussian") {
          kind = KernelKind::gaussian_distance;
        } else if (kernel == "exp_inner_product") {
          kind = KernelKind::exp_inner_product;
        } else {
          throw ConfigError("unknown kernel '" + kernel + "'");
        }
        return nw_predict(X, y, query, {kind, bandwidth}).value;
      },
      py::arg("X"), py::arg("y"), py::arg("query"), py::arg("kernel") = "gaussian", py::arg("bandwidth") = 1.0);
}
