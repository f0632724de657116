#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otoc/analytic.hpp"
#include "otoc/experiment.hpp"
#include "otoc/otoc_mc.hpp"
#include "otoc/propagator.hpp"
#include "otoc/wick.hpp"

namespace py = pybind11;
using namespace otoc;

namespace {

template <class F>
int run_command(F cmd, const std::string& path, std::optional<std::string> out_dir, std::optional<std::uint64_t> seed) {
  Overrides ov{out_dir, seed};
  std::ostringstream log;
  int rc;
  {
    py::gil_scoped_release release;
    rc = cmd(path, ov, log);
  }
  py::print(log.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
  return rc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "OTOC simulator and analytic engine for a locally-GOE banded random-matrix ensemble";

  py::enum_<OverlapMode>(m, "OverlapMode")
      .value("gaussian", OverlapMode::gaussian)
      .value("orthogonalized", OverlapMode::orthogonalized);
  py::enum_<EigenvalueMode>(m, "EigenvalueMode")
      .value("picket", EigenvalueMode::picket)
      .value("goe_unfolded", EigenvalueMode::goe_unfolded);
  py::enum_<OperatorKind>(m, "OperatorKind")
      .value("random_offdiag", OperatorKind::random_offdiag)
      .value("hopping", OperatorKind::hopping);
  py::enum_<Normalization>(m, "Normalization")
      .value("per_member", Normalization::per_member)
      .value("mean_Z", Normalization::mean_Z);

  py::class_<IndexRange>(m, "IndexRange")
      .def(py::init<int, int>(), py::arg("lo"), py::arg("hi"))
      .def_readwrite("lo", &IndexRange::lo)
      .def_readwrite("hi", &IndexRange::hi)
      .def("size", &IndexRange::size);

  py::class_<SpectrumModel>(m, "SpectrumModel")
      .def_static("from_levels", &SpectrumModel::from_levels, py::arg("D"), py::arg("N"), py::arg("d") = 1.0)
      .def_readonly("dimension", &SpectrumModel::dimension)
      .def_readonly("mean_spacing", &SpectrumModel::mean_spacing)
      .def_readonly("delta", &SpectrumModel::delta)
      .def("levels_per_window", &SpectrumModel::levels_per_window)
      .def("energies", &SpectrumModel::energies);

  py::class_<EnsembleConfig>(m, "EnsembleConfig")
      .def(py::init<>())
      .def_readwrite("spectrum", &EnsembleConfig::spectrum)
      .def_readwrite("eigenvalue_mode", &EnsembleConfig::eigenvalue_mode)
      .def_readwrite("overlap_mode", &EnsembleConfig::overlap_mode)
      .def_readwrite("band_cutoff", &EnsembleConfig::band_cutoff)
      .def_readwrite("seed", &EnsembleConfig::seed);

  py::class_<EnsembleMember>(m, "EnsembleMember")
      .def_readonly("O", &EnsembleMember::O)
      .def_readonly("E", &EnsembleMember::E)
      .def_readonly("index", &EnsembleMember::index);
  m.def("sample_member", &sample_member, py::arg("config"), py::arg("index"));
  m.def("build_hamiltonian", &build_hamiltonian);
  m.def("trace_Z", py::overload_cast<const EnsembleMember&, double>(&trace_Z), py::arg("member"), py::arg("beta"));

  py::class_<ObservablePair>(m, "ObservablePair")
      .def_readwrite("V", &ObservablePair::V)
      .def_readwrite("W", &ObservablePair::W)
      .def_readonly("support", &ObservablePair::support);
  m.def("generate_pair", &generate_pair, py::arg("D"), py::arg("kind"), py::arg("support"), py::arg("bandwidth"),
        py::arg("seed"));
  m.def("padded_support", &padded_support, py::arg("model"), py::arg("band_cutoff") = 6.0);

  m.def("eval_C", &eval_C, py::arg("member"), py::arg("pair"), py::arg("beta"), py::arg("t"),
        py::arg("norm") = Normalization::per_member, py::arg("model") = nullptr);
  m.def("eval_F", &eval_F, py::arg("member"), py::arg("pair"), py::arg("beta"), py::arg("t"),
        py::arg("norm") = Normalization::per_member, py::arg("model") = nullptr);
  m.def("eval_C_commutator", &eval_C_commutator);

  m.def("first_moment", &first_moment, py::arg("chi"), py::arg("e_m"), py::arg("delta"));
  m.def(
      "correlated_moment",
      [](std::vector<cplx> chis, std::vector<int> ms, const SpectrumModel& model) {
        return correlated_moment({std::move(chis), std::move(ms), {}}, model);
      },
      py::arg("chis"), py::arg("m_indices"), py::arg("model"));
  m.def(
      "exact_moment",
      [](std::vector<cplx> chis, std::vector<int> ms, const SpectrumModel& model, const std::string& restrict) {
        const Restriction r = restrict == "all"           ? Restriction::all
                              : restrict == "noncrossing" ? Restriction::noncrossing
                                                          : Restriction::connected_noncrossing;
        return exact_moment({std::move(chis), std::move(ms), {}}, model, r);
      },
      py::arg("chis"), py::arg("m_indices"), py::arg("model"), py::arg("restrict") = "connected_noncrossing");
  m.def("trace_Z_HF", py::overload_cast<double, const SpectrumModel&>(&trace_Z_HF));
  m.def("mean_trZ", py::overload_cast<double, const SpectrumModel&>(&mean_trZ));
  m.def("corr_trZ_squared", &corr_trZ_squared);
  m.def("F_prediction", &F_prediction, py::arg("pair"), py::arg("beta"), py::arg("t"), py::arg("model"));
  m.def(
      "C_prediction",
      [](const ObservablePair& p, double beta, double t, const SpectrumModel& model) {
        return C_prediction(p, beta, t, model).total();
      },
      py::arg("pair"), py::arg("beta"), py::arg("t"), py::arg("model"));
  m.def("C_asymptote", [](const ObservablePair& p, double beta, const SpectrumModel& model) {
    return C_asymptote(p, beta, model);
  });

  py::class_<OtocSeries>(m, "OtocSeries")
      .def_readonly("t", &OtocSeries::t)
      .def_readonly("C_mean", &OtocSeries::C_mean)
      .def_readonly("C_stderr", &OtocSeries::C_stderr)
      .def_readonly("C_analytic", &OtocSeries::C_analytic)
      .def_readonly("F_mean", &OtocSeries::F_mean)
      .def_readonly("F_stderr", &OtocSeries::F_stderr)
      .def_readonly("F_analytic", &OtocSeries::F_analytic)
      .def_readonly("M", &OtocSeries::M);
  m.def(
      "run_series",
      [](const EnsembleConfig& ens, OperatorKind kind, double beta, std::vector<double> t_grid, int members,
         int bandwidth, std::uint64_t pair_seed, int workers) {
        RunConfig r;
        r.ensemble = ens;
        r.pair.kind = kind;
        r.pair.bandwidth = bandwidth;
        r.pair.seed = pair_seed;
        r.beta = beta;
        r.t_grid = std::move(t_grid);
        r.members = members;
        r.workers = workers;
        py::gil_scoped_release release;
        return run_series(r);
      },
      py::arg("ensemble"), py::arg("kind"), py::arg("beta"), py::arg("t_grid"), py::arg("members"),
      py::arg("bandwidth") = 1, py::arg("pair_seed") = 0, py::arg("workers") = 0);

  m.def("run", [](const std::string& p, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
    return run_command(cmd_run, p, out, seed);
  }, py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none());
  m.def("validate_moments", [](const std::string& p, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
    return run_command(cmd_validate_moments, p, out, seed);
  }, py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none());
  m.def("variance_report", [](const std::string& p, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
    return run_command(cmd_variance_report, p, out, seed);
  }, py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none());
}
