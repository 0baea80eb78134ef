#include "kann/errors.hpp"
#include "kann/harness.hpp"
#include "kann/koopman.hpp"
#include "kann/metrics.hpp"
#include "kann/report.hpp"
#include "kann/spectral.hpp"
#include "kann/state_io.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>

namespace py = pybind11;
using namespace kann;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

HiddenStateTensor to_tensor(const Array &a, const std::optional<MaskArray> &mask) {
  if (a.ndim() != 3)
    throw DimensionError("states must be a 3-d array (samples, steps, dim), got " + std::to_string(a.ndim()) +
                         " dimensions");
  const auto s = static_cast<std::size_t>(a.shape(0)), n = static_cast<std::size_t>(a.shape(1)),
             k = static_cast<std::size_t>(a.shape(2));
  std::vector<double> data(a.data(), a.data() + a.size());
  std::optional<std::vector<std::uint8_t>> m;
  if (mask) {
    if (mask->ndim() != 2 || static_cast<std::size_t>(mask->shape(0)) != s ||
        static_cast<std::size_t>(mask->shape(1)) != n)
      throw DimensionError("mask must have shape (samples, steps)");
    m.emplace(mask->data(), mask->data() + mask->size());
  }
  return HiddenStateTensor(s, n, k, std::move(data), std::move(m));
}

Array from_tensor(const HiddenStateTensor &t) {
  Array out({t.samples(), t.steps(), t.dim()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

double horizon_value(const MemoryHorizon &h) {
  switch (h.kind) {
  case MemoryHorizon::Kind::Infinite:
    return std::numeric_limits<double>::infinity();
  case MemoryHorizon::Kind::Unstable:
    return std::numeric_limits<double>::quiet_NaN();
  default:
    return h.steps;
  }
}

ProjectorVariant parse_variant(const std::string &text) {
  if (text == "modulus")
    return ProjectorVariant::Modulus;
  if (text == "real-part")
    return ProjectorVariant::RealPart;
  throw ArgumentError("variant must be 'modulus' or 'real-part', got '" + text + "'");
}

Embedding parse_embedding(const std::string &text) {
  for (Embedding e : {Embedding::Raw, Embedding::PcaTop, Embedding::KoopmanTop, Embedding::KoopmanModulus})
    if (to_string(e) == text)
      return e;
  throw ArgumentError("unknown embedding '" + text + "'");
}

} // namespace

PYBIND11_MODULE(_kann, m) {
  m.doc() = "Koopman analysis of recurrent hidden states";
  m.attr("__version__") = toolkit_version();

  auto base = py::register_exception<Error>(m, "KannError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<ConditionError>(m, "ConditionError", base.ptr());
  py::register_exception<ModeClosureError>(m, "ModeClosureError", base.ptr());

  py::class_<SpectralBasis>(m, "SpectralBasis")
      .def_readonly("vectors", &SpectralBasis::vectors)
      .def_readonly("singular_values", &SpectralBasis::singular_values)
      .def_property_readonly("method", [](const SpectralBasis &b) { return to_string(b.method); })
      .def_readonly("mean", &SpectralBasis::mean)
      .def_property_readonly("rank", &SpectralBasis::rank);

  py::class_<KoopmanOperator>(m, "KoopmanOperator")
      .def_readonly("matrix", &KoopmanOperator::matrix)
      .def_readonly("basis", &KoopmanOperator::basis)
      .def_readonly("fit_residual", &KoopmanOperator::fit_residual)
      .def_property_readonly("rank", &KoopmanOperator::rank);

  py::class_<EigenSystem>(m, "EigenSystem")
      .def_readonly("eigenvalues", &EigenSystem::lambdas)
      .def_readonly("right", &EigenSystem::right)
      .def_readonly("left", &EigenSystem::left)
      .def_readonly("condition", &EigenSystem::condition)
      .def_readonly("defective", &EigenSystem::defective)
      .def("__len__", &EigenSystem::size);

  m.def(
      "compute_basis",
      [](const Array &states, std::optional<std::size_t> rank, const std::string &method,
         const std::optional<MaskArray> &mask) {
        return compute_basis(to_tensor(states, mask), rank, parse_basis_method(method));
      },
      py::arg("states"), py::arg("rank") = py::none(), py::arg("method") = "svd", py::arg("mask") = py::none());

  m.def(
      "fit",
      [](const Array &states, std::optional<std::size_t> rank, const std::string &method,
         const std::optional<MaskArray> &mask) {
        const auto h = to_tensor(states, mask);
        return fit_koopman(h, compute_basis(h, rank, parse_basis_method(method)));
      },
      py::arg("states"), py::arg("rank") = py::none(), py::arg("method") = "svd", py::arg("mask") = py::none(),
      "Fits the reduced operator; rows of `matrix` act on row coefficients.");

  m.def(
      "decompose", [](const KoopmanOperator &op) { return decompose(op); }, py::arg("op"));

  m.def(
      "predict_next", [](const RealMatrix &states, const KoopmanOperator &op) { return predict_next(states, op); },
      py::arg("states"), py::arg("op"));

  m.def(
      "predict_ahead",
      [](const Array &states, const KoopmanOperator &op, std::size_t steps, const std::optional<MaskArray> &mask) {
        const auto pair = predict_ahead(to_tensor(states, mask), op, steps);
        return py::make_tuple(from_tensor(pair.predicted), from_tensor(pair.actual));
      },
      py::arg("states"), py::arg("op"), py::arg("steps") = 1, py::arg("mask") = py::none(),
      "Returns (predicted, actual), each of shape (samples, steps - lead, dim).");

  m.def(
      "relative_error",
      [](const Array &predicted, const Array &actual, const std::optional<MaskArray> &mask) {
        return relative_error(to_tensor(predicted, mask), to_tensor(actual, mask));
      },
      py::arg("predicted"), py::arg("actual"), py::arg("mask") = py::none());

  m.def(
      "separability_residual",
      [](const Array &states, const KoopmanOperator &op, const EigenSystem &eig) {
        return separability_residual(to_tensor(states, std::nullopt), op.basis, eig);
      },
      py::arg("states"), py::arg("op"), py::arg("eig"));

  m.def(
      "memory_horizon",
      [](Complex lambda, double epsilon) { return horizon_value(memory_horizon(lambda, epsilon)); },
      py::arg("eigenvalue"), py::arg("epsilon") = kDefaultEpsilon,
      "Steps until |lambda|^t falls to epsilon; inf on the unit circle, nan outside it.");

  m.def("conjugate_closure", &conjugate_closure, py::arg("eig"), py::arg("modes"));

  m.def(
      "dominant_modes",
      [](const EigenSystem &eig, std::size_t count, const std::optional<Array> &states,
         const std::optional<KoopmanOperator> &op) {
        if (states && op)
          return dominant_modes(eig, count, to_tensor(*states, std::nullopt), op->basis);
        return dominant_modes(eig, count);
      },
      py::arg("eig"), py::arg("count"), py::arg("states") = py::none(), py::arg("op") = py::none());

  m.def(
      "magnitude_series",
      [](const Array &states, const KoopmanOperator &op, const EigenSystem &eig, const ModeIndexSet &modes) {
        return magnitude_series(to_tensor(states, std::nullopt), op.basis, eig, modes);
      },
      py::arg("states"), py::arg("op"), py::arg("eig"), py::arg("modes"));

  m.def(
      "subspace_projector",
      [](const KoopmanOperator &op, const EigenSystem &eig, const ModeIndexSet &modes, const std::string &variant) {
        return subspace_projector(op.basis, eig, modes, parse_variant(variant));
      },
      py::arg("op"), py::arg("eig"), py::arg("modes"), py::arg("variant") = "modulus");

  m.def(
      "silhouette_points",
      [](const RealMatrix &points, const std::vector<int> &labels) { return silhouette_points(points, labels); },
      py::arg("points"), py::arg("labels"));

  m.def(
      "silhouette_curve",
      [](const Array &states, const std::vector<int> &labels, const std::string &embedding, std::size_t d,
         std::optional<std::size_t> rank) {
        const auto h = to_tensor(states, std::nullopt);
        const auto e = parse_embedding(embedding);
        const auto basis = compute_basis(h, rank);
        std::optional<EigenSystem> eig;
        if (e == Embedding::KoopmanTop || e == Embedding::KoopmanModulus)
          eig = decompose(fit_koopman(h, basis));
        return silhouette_curve(h, basis, labels, e, d, eig ? &*eig : nullptr).values;
      },
      py::arg("states"), py::arg("labels"), py::arg("embedding") = "raw", py::arg("d") = 2,
      py::arg("rank") = py::none());

  m.def(
      "agreement",
      [](const std::vector<int> &network, const std::vector<int> &surrogate, std::size_t categories) {
        const auto r = agreement(network, surrogate, categories);
        py::dict out;
        out["total"] = r.total;
        out["matching"] = r.matching;
        out["rate"] = r.rate();
        out["confusion"] = r.confusion;
        return out;
      },
      py::arg("network"), py::arg("surrogate"), py::arg("categories"));

  m.def(
      "gen_linear",
      [](std::size_t k, std::size_t samples, std::size_t steps, double spectral_radius, double noise,
         std::uint64_t seed) {
        const auto dyn = random_linear_dynamics(k, spectral_radius, seed);
        return py::make_tuple(dyn.transition, from_tensor(gen_linear(dyn, samples, steps, noise, seed + 1)));
      },
      py::arg("k"), py::arg("samples"), py::arg("steps"), py::arg("spectral_radius") = 0.9,
      py::arg("noise") = 0.0, py::arg("seed") = 0,
      "Returns (A, states) with states[s, t + 1] = A @ states[s, t] before noise.");

  m.def(
      "load_tensor", [](const std::filesystem::path &path) { return from_tensor(load_tensor(path)); },
      py::arg("path"));
  m.def(
      "save_tensor",
      [](const Array &states, const std::filesystem::path &path) { save_tensor(to_tensor(states, std::nullopt), path); },
      py::arg("states"), py::arg("path"));

  m.def("report_schema", [] { return report_schema().dump(); }, "JSON text of the report schema.");
  m.def(
      "validate_report", [](const std::string &text) { validate_report_json(nlohmann::json::parse(text)); },
      py::arg("text"));
}
