#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ldon/config.hpp"
#include "ldon/container.hpp"
#include "ldon/datagen.hpp"
#include "ldon/deeponet.hpp"
#include "ldon/dimred.hpp"
#include "ldon/error.hpp"
#include "ldon/fft.hpp"
#include "ldon/linalg.hpp"
#include "ldon/metrics.hpp"
#include "ldon/pipeline.hpp"
#include "ldon/random_fields.hpp"

namespace py = pybind11;
using namespace ldon;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor from_numpy(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<std::complex<double>> spectrum_to_numpy(const ComplexSpectrum& s) {
  py::array_t<std::complex<double>> out({s.rows, s.cols});
  std::copy(s.values.begin(), s.values.end(), out.mutable_data());
  return out;
}

ComplexSpectrum spectrum_from_numpy(const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  ComplexSpectrum s{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), {}};
  s.values.assign(a.data(), a.data() + a.size());
  return s;
}

std::vector<double> as_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

OperatorKind operator_kind(const std::string& name) {
  if (name == "latent") return OperatorKind::latent;
  if (name == "full") return OperatorKind::full;
  if (name == "fno") return OperatorKind::fno;
  throw ConfigError("unknown operator kind '" + name + "' (expected latent, full or fno)");
}

}  // namespace

PYBIND11_MODULE(ldeeponet, m) {
  m.doc() = "Latent DeepONet engine: data generation, dimension reduction and neural operators";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  auto artifact = py::register_exception<ArtifactError>(m, "ArtifactError", PyExc_IOError);
  py::register_exception<MissingArtifact>(m, "MissingArtifact", artifact.ptr());

  // Spectral and linear algebra kernels.
  m.def(
      "fft2",
      [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& field, bool inverse) {
        return spectrum_to_numpy(fft2(spectrum_from_numpy(field), inverse ? FftDirection::inverse : FftDirection::forward));
      },
      py::arg("field"), py::arg("inverse") = false,
      "2-D DFT of a power-of-two grid. The inverse includes the 1/M factor.");
  m.def(
      "sym_eig",
      [](const Matrix& a) {
        const auto r = sym_eig(a);
        return py::make_tuple(Vector(r.eigenvalues), Matrix(r.eigenvectors));
      },
      py::arg("a"), "Eigenvalues (descending) and eigenvectors of a symmetric matrix.");
  m.def(
      "truncated_svd",
      [](const Matrix& x, std::size_t k) {
        const auto r = truncated_svd(x, k);
        return py::make_tuple(Matrix(r.u), Vector(r.s), Matrix(r.v));
      },
      py::arg("x"), py::arg("k"));

  // Random fields.
  py::class_<GrfConfig>(m, "GrfConfig")
      .def(py::init<>())
      .def_readwrite("nx", &GrfConfig::nx)
      .def_readwrite("ny", &GrfConfig::ny)
      .def_readwrite("length_x", &GrfConfig::length_x)
      .def_readwrite("length_y", &GrfConfig::length_y)
      .def_readwrite("variance", &GrfConfig::variance)
      .def_readwrite("kle_energy", &GrfConfig::kle_energy)
      .def_readwrite("seed", &GrfConfig::seed);
  py::class_<KleBasis>(m, "KleBasis")
      .def_readonly("nx", &KleBasis::nx)
      .def_readonly("ny", &KleBasis::ny)
      .def_readonly("modes", &KleBasis::modes)
      .def_readonly("eigenvalues", &KleBasis::eigenvalues)
      .def_readonly("total_energy", &KleBasis::total_energy)
      .def_property_readonly("mode_count", &KleBasis::mode_count)
      .def("sample", [](const KleBasis& b, std::uint64_t seed) { return sample_field(b, seed); }, py::arg("seed"));
  m.def("build_kle", &build_kle, py::arg("config"));
  m.def("assemble_covariance", &assemble_covariance, py::arg("config"));

  // Analytic initial conditions.
  py::class_<JetParams>(m, "JetParams")
      .def(py::init<>())
      .def_readwrite("u_max", &JetParams::u_max)
      .def_readwrite("phi0", &JetParams::phi0)
      .def_readwrite("phi1", &JetParams::phi1);
  py::class_<PerturbParams>(m, "PerturbParams")
      .def(py::init<>())
      .def_readwrite("h_hat", &PerturbParams::h_hat)
      .def_readwrite("phi2", &PerturbParams::phi2)
      .def_readwrite("alpha", &PerturbParams::alpha)
      .def_readwrite("beta", &PerturbParams::beta);
  py::class_<CrackParams>(m, "CrackParams")
      .def(py::init<>())
      .def_readwrite("y_c", &CrackParams::y_c)
      .def_readwrite("l_c", &CrackParams::l_c)
      .def_readwrite("l0", &CrackParams::l0)
      .def_readwrite("B", &CrackParams::B)
      .def_readwrite("G_c", &CrackParams::G_c);
  m.def(
      "zonal_jet_u", [](const Array& phi, const JetParams& p) { return zonal_jet_u(as_vector(phi), p); },
      py::arg("phi"), py::arg("params") = JetParams{});
  m.def(
      "height_perturbation",
      [](const Array& lambda, const Array& phi, const PerturbParams& p) {
        const auto h = height_perturbation(as_vector(lambda), as_vector(phi), p);
        return to_numpy(Tensor({static_cast<std::size_t>(lambda.size()), static_cast<std::size_t>(phi.size())}, h));
      },
      py::arg("lam"), py::arg("phi"), py::arg("params") = PerturbParams{});
  m.def(
      "balanced_height",
      [](const Array& phi, const JetParams& p, double mean_depth, int nodes) {
        return balanced_height(as_vector(phi), p, mean_depth, nodes);
      },
      py::arg("phi"), py::arg("params") = JetParams{}, py::arg("mean_depth") = 10000.0, py::arg("nodes") = 16);
  m.def("latitude_grid", &latitude_grid, py::arg("n"));
  m.def("strain_history", &strain_history, py::arg("nx"), py::arg("ny"), py::arg("params") = CrackParams{});
  m.def("strain_history_at", &strain_history_at, py::arg("x"), py::arg("y"), py::arg("params") = CrackParams{});

  // Configuration.
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("parse", &parse_config, py::arg("text"))
      .def("set", &apply_override, py::arg("assignment"), "Applies one key=value override.")
      .def("validate", &ExperimentConfig::validate)
      .def("canonical", [](const ExperimentConfig& c) { return canonical_config(c); })
      .def("hash", [](const ExperimentConfig& c) { return config_hash(c); })
      .def_readonly("warnings", &ExperimentConfig::warnings)
      .def_readwrite("seeds", &ExperimentConfig::seeds);

  // Data and reducers.
  py::class_<MinMax>(m, "MinMax").def_readonly("min", &MinMax::min).def_readonly("max", &MinMax::max);
  py::class_<FieldDataset>(m, "FieldDataset")
      .def_readonly("nx", &FieldDataset::nx)
      .def_readonly("ny", &FieldDataset::ny)
      .def_readonly("m_t", &FieldDataset::m_t)
      .def_readonly("n_train", &FieldDataset::n_train)
      .def_readonly("zeta", &FieldDataset::zeta)
      .def_readonly("inputs", &FieldDataset::inputs)
      .def_readonly("outputs", &FieldDataset::outputs)
      .def_readonly("input_norm", &FieldDataset::input_norm)
      .def_readonly("output_norm", &FieldDataset::output_norm)
      .def("normalized_inputs", &FieldDataset::normalized_inputs)
      .def("normalized_outputs", &FieldDataset::normalized_outputs)
      .def("snapshots", [](const FieldDataset& ds) { return Matrix(assemble_snapshots(ds, SnapshotMode::combined).rows); })
      .def("save", [](const FieldDataset& ds, const std::filesystem::path& p) { write_tensor_container(p, to_container(ds)); })
      .def_static("load", [](const std::filesystem::path& p) { return dataset_from_container(read_tensor_container(p)); });
  m.def("generate_dataset", &generate_dataset, py::arg("config"));

  py::class_<ReducerModel, std::shared_ptr<ReducerModel>>(m, "Reducer")
      .def_property_readonly("kind", [](const ReducerModel& r) { return r.kind == ReducerKind::mlae ? "mlae" : "pca"; })
      .def_readonly("input_dim", &ReducerModel::input_dim)
      .def_readonly("latent_dim", &ReducerModel::latent_dim)
      .def_readonly("training_log", &ReducerModel::training_log)
      .def("encode", &ReducerModel::encode, py::arg("rows"))
      .def("decode", &ReducerModel::decode, py::arg("latents"))
      .def("reconstruct", &ReducerModel::reconstruct, py::arg("rows"))
      .def("reconstruction_mse", [](const ReducerModel& r, const Matrix& rows) { return reconstruction_mse(r, rows); })
      .def("save", [](const ReducerModel& r, const std::filesystem::path& p) { write_tensor_container(p, to_container(r)); })
      .def_static("load", [](const std::filesystem::path& p) { return reducer_from_container(read_tensor_container(p)); });
  m.def(
      "fit_pca",
      [](const Matrix& rows, std::size_t nx, std::size_t ny, std::size_t d) {
        return fit_pca(SnapshotSet{rows, nx, ny}, d);
      },
      py::arg("rows"), py::arg("nx"), py::arg("ny"), py::arg("d"));
  m.def(
      "fit_mlae",
      [](const Matrix& rows, std::size_t nx, std::size_t ny, std::size_t d, std::size_t epochs, std::size_t batch,
         double lr, std::uint64_t seed) {
        MlaeConfig cfg;
        cfg.latent_dim = d;
        cfg.epochs = epochs;
        cfg.batch_size = batch;
        cfg.learning_rate = lr;
        cfg.seed = seed;
        py::gil_scoped_release release;
        return fit_mlae(SnapshotSet{rows, nx, ny}, cfg);
      },
      py::arg("rows"), py::arg("nx"), py::arg("ny"), py::arg("d"), py::arg("epochs") = 200, py::arg("batch_size") = 32,
      py::arg("learning_rate") = 1e-3, py::arg("seed") = 0);
  m.def("fit_reducer", &fit_reducer, py::arg("config"), py::arg("dataset"), py::arg("d"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());

  // Operators.
  py::class_<TrainedOperator>(m, "TrainedOperator")
      .def_property_readonly("kind", [](const TrainedOperator& t) { return operator_name(t.kind); })
      .def_property_readonly("reducer", [](const TrainedOperator& t) { return t.reducer; })
      .def_property_readonly("report", [](const TrainedOperator& t) { return report_json(t.report); })
      .def_property_readonly("decoded_mse", [](const TrainedOperator& t) { return t.report.decoded_mse; })
      .def_property_readonly("train_loss", [](const TrainedOperator& t) { return t.report.train_loss; })
      .def_property_readonly("parameters", [](const TrainedOperator& t) { return t.report.parameters; })
      .def("predict", &predict_rows, py::arg("dataset"), py::arg("begin"), py::arg("end"),
           "Decoded trajectories [rows, m_t * nx * ny] for dataset rows [begin, end).");
  m.def(
      "train_operator",
      [](const ExperimentConfig& cfg, const FieldDataset& ds, const std::string& kind, std::size_t d,
         std::uint64_t seed, std::shared_ptr<ReducerModel> reducer) {
        py::gil_scoped_release release;
        return train_operator(cfg, ds, operator_kind(kind), d, seed, std::move(reducer));
      },
      py::arg("config"), py::arg("dataset"), py::arg("kind") = "latent", py::arg("d") = 64, py::arg("seed") = 1,
      py::arg("reducer") = nullptr);
  m.def(
      "compare",
      [](const ExperimentConfig& cfg, const FieldDataset& ds, std::size_t threads) {
        std::vector<CompareRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_compare(cfg, ds, threads == 0 ? thread_budget() : threads);
        }
        return py::make_tuple(compare_csv(rows), compare_mse_csv(rows));
      },
      py::arg("config"), py::arg("dataset"), py::arg("threads") = 0,
      "Runs every (model, d, seed) entry. Returns (timed CSV, deterministic CSV).");
  m.def("evaluate_mse", py::overload_cast<const Matrix&, const Matrix&>(&evaluate_mse), py::arg("predictions"),
        py::arg("references"));

  // Tensor containers.
  m.def(
      "save_tensors",
      [](const std::filesystem::path& path, const std::map<std::string, Array>& tensors, const std::string& manifest) {
        TensorContainer c;
        c.manifest = manifest;
        for (const auto& [name, a] : tensors) c.add(name, from_numpy(a));
        write_tensor_container(path, c);
      },
      py::arg("path"), py::arg("tensors"), py::arg("manifest") = "");
  m.def(
      "load_tensors",
      [](const std::filesystem::path& path) {
        const auto c = read_tensor_container(path);
        py::dict out;
        for (const auto& [name, t] : c.tensors) out[py::str(name)] = to_numpy(t);
        return py::make_tuple(out, c.manifest);
      },
      py::arg("path"), "Returns (dict of arrays, manifest text).");
}
