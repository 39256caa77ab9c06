#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pdlab/asymptotics.hpp"
#include "pdlab/errors.hpp"
#include "pdlab/exact_laws.hpp"
#include "pdlab/experiment.hpp"
#include "pdlab/rate_functions.hpp"
#include "pdlab/sampling.hpp"
#include "pdlab/selection.hpp"

namespace py = pybind11;
using namespace pdlab;

namespace {

double ext(const ExtendedReal& x) { return x.to_double(); }

py::dict report_dict(const asymptotics::ConvergenceReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    rows.append(py::dict(py::arg("quantity") = row.quantity, py::arg("theta") = row.theta,
                         py::arg("statistic") = row.statistic, py::arg("target") = row.target,
                         py::arg("gap") = row.gap, py::arg("err") = row.err, py::arg("method") = row.method));
  }
  py::list checks;
  for (const auto& c : r.checks) {
    checks.append(py::dict(py::arg("name") = c.name, py::arg("pass") = c.pass, py::arg("value") = c.value,
                           py::arg("threshold") = c.threshold));
  }
  return py::dict(py::arg("name") = r.name, py::arg("label") = r.label, py::arg("pass") = r.pass(),
                  py::arg("monotone") = r.monotone, py::arg("final_gap") = r.final_gap, py::arg("rows") = rows,
                  py::arg("checks") = checks);
}

rates::HFunctional make_h(const std::string& name, int m) {
  if (name == "minus_phi") return rates::HFunctional::minus_phi(m);
  if (name == "plus_phi") return rates::HFunctional::plus_phi(m);
  throw DomainError("h must be minus_phi or plus_phi");
}

}  // namespace

PYBIND11_MODULE(_pdlab, mod) {
  mod.doc() = "Poisson-Dirichlet large-deviation laboratory";
  mod.attr("__version__") = PDLAB_VERSION;

  py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(mod, "NumericError", PyExc_ArithmeticError);
  py::register_exception<UnsupportedError>(mod, "UnsupportedError", PyExc_NotImplementedError);

  mod.def(
      "sample_ranked",
      [](double theta, std::uint64_t seed, std::uint64_t stream, std::size_t top) {
        const auto r = sampling::gem_to_ranked(sampling::draw_gem({theta, sampling::ResidualTarget{}, seed, stream}));
        std::vector<double> p(r.p.begin(), r.p.begin() + static_cast<long>(std::min(top, r.p.size())));
        return py::make_tuple(p, r.residual);
      },
      py::arg("theta"), py::arg("seed") = 0, py::arg("stream") = 0, py::arg("top") = 10,
      "Largest `top` ranked frequencies of one PD(theta) draw and the GEM residual.");
  mod.def("choose_truncation", &sampling::choose_truncation, py::arg("theta"), py::arg("epsilon") = 1e-12,
          py::arg("delta") = 1e-9);

  mod.def("rate_I", [](double x) { return ext(rates::rate_I(x)); }, py::arg("x"));
  mod.def("cgf_Lambda", &rates::cgf_Lambda, py::arg("lam"));
  mod.def("legendre_transform", &rates::legendre_transform, py::arg("x"));
  mod.def("rate_Ik", [](int k, double x) { return ext(rates::rate_Ik(k, x)); }, py::arg("k"), py::arg("x"));
  mod.def("rate_Sn", [](const std::vector<double>& p) { return ext(rates::rate_Sn(p)); }, py::arg("p"));
  mod.def("rate_S", [](const std::vector<double>& p) { return ext(rates::rate_S_finite(p)); }, py::arg("p"));
  mod.def("rate_homozygosity", [](int m, double y) { return ext(rates::rate_homozygosity(m, y)); }, py::arg("m"),
          py::arg("y"));
  mod.def(
      "selection_sup",
      [](double c, const std::string& h, int m) {
        const auto s = rates::selection_sup(c, make_h(h, m));
        return py::dict(py::arg("s_star") = s.s_star, py::arg("sup_value") = s.sup_value,
                        py::arg("optimizer") = s.optimizer, py::arg("approximate") = s.approximate);
      },
      py::arg("c"), py::arg("h") = "plus_phi", py::arg("m") = 2);
  mod.def(
      "solve_c0",
      [] {
        const auto r = rates::solve_c0();
        return py::make_tuple(r.c0, r.residual);
      },
      "Returns (c0, residual).");

  mod.def("moment_pk", [](int k, int n, double theta) { return exact::moment_pk({k, n, theta}); }, py::arg("k"),
          py::arg("n"), py::arg("theta"));
  mod.def("homozygosity_moment", &exact::homozygosity_moment, py::arg("m"), py::arg("theta"));

  py::class_<exact::DensityGrid>(mod, "DensityGrid")
      .def_static("build", &exact::DensityGrid::build, py::arg("theta"), py::arg("resolution") = 64,
                  py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("theta", &exact::DensityGrid::theta)
      .def_property_readonly("band_count", &exact::DensityGrid::band_count)
      .def_property_readonly("unresolved_mass", &exact::DensityGrid::unresolved_mass)
      .def("tail", &exact::DensityGrid::tail, py::arg("x"))
      .def("log_tail", &exact::DensityGrid::log_tail, py::arg("x"))
      .def("cdf", &exact::DensityGrid::cdf, py::arg("x"))
      .def("density", &exact::DensityGrid::density, py::arg("p"))
      .def("rank_tail", [](const exact::DensityGrid& g, int k, double x) { return exact::rank_tail(g, k, x); },
           py::arg("k"), py::arg("x"));

  mod.def(
      "verify_ldp_p1",
      [](const std::vector<double>& thetas, double x, int resolution) {
        asymptotics::ThetaSweep s;
        s.thetas = thetas;
        asymptotics::ConvergenceReport r;
        {
          py::gil_scoped_release release;
          r = asymptotics::verify_ldp_p1(s, x, resolution);
        }
        return report_dict(r);
      },
      py::arg("thetas"), py::arg("x"), py::arg("resolution") = 64);

  mod.def(
      "phase_classify",
      [](double c, double gamma, const std::string& h, int m) {
        const auto res = selection::phase_classify(selection::regime_from_alpha(c, gamma, make_h(h, m)));
        return py::dict(py::arg("label") = selection::to_string(res.label),
                        py::arg("branch") = selection::to_string(res.branch), py::arg("constant") = res.constant);
      },
      py::arg("c"), py::arg("gamma"), py::arg("h") = "minus_phi", py::arg("m") = 2);

  mod.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::main_entry(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a pdlab command in-process; returns (exit_code, stdout, stderr).");
}
