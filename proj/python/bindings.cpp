#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qecdm/analysis.hpp"
#include "qecdm/cli.hpp"
#include "qecdm/codes.hpp"
#include "qecdm/ftqec.hpp"
#include "qecdm/propagator.hpp"

namespace py = pybind11;
using namespace qecdm;

namespace {

py::dict point_to_dict(const PointResult& p) {
  py::list samples;
  for (const auto& s : p.series.samples) samples.append(py::make_tuple(s.n, s.t, s.p));
  py::dict d;
  d["gamma"] = p.gamma;
  d["ok"] = p.ok;
  d["note"] = p.note;
  d["gamma_n"] = p.fit.gamma_n;
  d["gamma_t"] = p.fit.gamma_t;
  d["residual"] = p.fit.residual;
  d["encoded_rate"] = p.encoded_rate();
  d["bare_rate"] = p.bare_rate();
  d["ratio"] = p.ratio();
  d["tau"] = p.series.tau;
  d["early_stopped"] = p.series.early_stopped;
  d["max_branch_count"] = p.series.max_branch_count;
  d["samples"] = samples;
  return d;
}

CrashSeries series_from(const std::vector<std::tuple<int, double, double>>& samples, double tau, bool early) {
  CrashSeries s;
  s.tau = tau;
  s.early_stopped = early;
  for (const auto& [n, t, p] : samples) s.samples.push_back({n, t, p});
  return s;
}

}  // namespace

PYBIND11_MODULE(_qecdm, m) {
  m.doc() = "Density-matrix simulation of small fault-tolerant error-correction protocols";

  py::enum_<Protocol>(m, "Protocol").value("A", Protocol::A).value("B", Protocol::B);
  py::enum_<Parallelism>(m, "Parallelism")
      .value("SEQUENTIAL", Parallelism::Sequential)
      .value("INCREASED", Parallelism::Increased)
      .value("MAXIMAL", Parallelism::Maximal);
  py::enum_<Bath>(m, "Bath").value("DISTINCT", Bath::Distinct).value("COLLECTIVE", Bath::Collective);
  py::enum_<NoiseAxis>(m, "NoiseAxis").value("X", NoiseAxis::X).value("Z", NoiseAxis::Z).value("BOTH", NoiseAxis::Both);
  py::enum_<ExperimentKind>(m, "ExperimentKind")
      .value("MEMORY", ExperimentKind::Memory)
      .value("LOGICAL_X", ExperimentKind::LogicalX);

  py::register_exception<NoCrossing>(m, "NoCrossing", PyExc_RuntimeError);
  py::register_exception<BeyondThreshold>(m, "BeyondThreshold", PyExc_RuntimeError);

  py::class_<ExperimentDescriptor>(m, "Experiment")
      .def(py::init<>())
      .def_readwrite("code", &ExperimentDescriptor::code)
      .def_readwrite("kind", &ExperimentDescriptor::kind)
      .def_readwrite("protocol", &ExperimentDescriptor::protocol)
      .def_readwrite("level", &ExperimentDescriptor::level)
      .def_readwrite("bath", &ExperimentDescriptor::bath)
      .def_readwrite("axis", &ExperimentDescriptor::axis)
      .def_readwrite("povm_eta", &ExperimentDescriptor::povm_eta)
      .def_readwrite("workers", &ExperimentDescriptor::workers)
      .def_property(
          "n_steps", [](const ExperimentDescriptor& d) { return d.options.n_steps; },
          [](ExperimentDescriptor& d, int n) { d.options.n_steps = n; })
      .def_property(
          "stop_at", [](const ExperimentDescriptor& d) { return d.options.stop_at; },
          [](ExperimentDescriptor& d, double p) { d.options.stop_at = p; });

  m.def(
      "evaluate_point",
      [](const ExperimentDescriptor& d, double g) {
        PointResult p;
        {
          py::gil_scoped_release release;
          p = evaluate_point(d, g);
        }
        return point_to_dict(p);
      },
      py::arg("experiment"), py::arg("gamma"));
  m.def(
      "threshold_scan",
      [](const ExperimentDescriptor& d, const std::vector<double>& grid, bool refine) {
        ThresholdResult r;
        {
          py::gil_scoped_release release;
          r = threshold_scan(d, grid, refine);
        }
        py::list curve;
        for (const auto& c : r.curve) curve.append(py::make_tuple(c.gamma, c.encoded, c.bare));
        py::dict out;
        out["gamma_star"] = r.gamma_star;
        out["bracket"] = py::make_tuple(r.bracket.first, r.bracket.second);
        out["curve"] = curve;
        return out;
      },
      py::arg("experiment"), py::arg("grid"), py::arg("refine") = false);
  m.def("log_grid", &log_grid, py::arg("start"), py::arg("stop"), py::arg("points"));

  m.def(
      "fit_crash_rate",
      [](const std::vector<std::tuple<int, double, double>>& samples, double tau, bool early_stopped) {
        const auto f = fit_crash_rate(series_from(samples, tau, early_stopped));
        return py::make_tuple(f.gamma_n, f.gamma_t, f.residual);
      },
      py::arg("samples"), py::arg("tau"), py::arg("early_stopped") = false,
      "Fit (n, t, P_c) samples; returns (gamma_n, gamma_t, residual).");
  m.def(
      "synthetic_series",
      [](double gamma_n, double tau, int steps) {
        std::vector<std::tuple<int, double, double>> out;
        for (const auto& s : synthetic_series(gamma_n, tau, steps).samples) out.emplace_back(s.n, s.t, s.p);
        return out;
      },
      py::arg("gamma_n"), py::arg("tau"), py::arg("steps"));

  m.def(
      "bare_memory_crash",
      [](double gamma0, double gamma1, double t) {
        NoiseModel n;
        n.gamma0 = gamma0;
        n.gamma1 = gamma1;
        BareExperiment e;
        e.duration = t;
        return bare_qubit_crash(e, n);
      },
      py::arg("gamma0"), py::arg("gamma1"), py::arg("t"));

  m.def(
      "syndrome",
      [](const std::string& code, const std::string& pauli) { return code_by_name(code).syndrome_of(PauliString(pauli)); },
      py::arg("code"), py::arg("pauli"));
  m.def(
      "codewords",
      [](const std::string& code) {
        const auto c = code_by_name(code);
        return py::make_tuple(Eigen::VectorXcd(c.codeword0), Eigen::VectorXcd(c.codeword1));
      },
      py::arg("code"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"qecdm"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line interface; returns (exit_code, stdout, stderr).");
  m.def("version", &version_string);
}
