#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "resetfd/case_study.hpp"
#include "resetfd/error.hpp"
#include "resetfd/robustness.hpp"
#include "resetfd/scenario.hpp"
#include "resetfd/sim.hpp"
#include "resetfd/synth.hpp"

namespace py = pybind11;
using namespace resetfd;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<cplx> spectrum_array(const HarmonicSpectrum& s) {
  // index n - 1 holds order n; even orders are zero
  py::array_t<cplx> out(s.n_max());
  auto m = out.mutable_unchecked<1>();
  for (int n = 1; n <= s.n_max(); ++n) m(n - 1) = s[n];
  return out;
}

FrequencyGrid grid_from(const std::vector<double>& omegas) { return FrequencyGrid(omegas); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Harmonic analysis and shaping-filter synthesis for reset control loops";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

  py::class_<RationalTF>(m, "RationalTF")
      .def(py::init<>())
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("num"), py::arg("den"))
      .def_property_readonly("num", &RationalTF::num)
      .def_property_readonly("den", &RationalTF::den)
      .def("__call__", [](const RationalTF& tf, double omega) { return eval_freq(tf, omega); }, py::arg("omega"))
      .def("__mul__", [](const RationalTF& a, const RationalTF& b) { return series(a, b); });
  m.def("eval_freq", &eval_freq, py::arg("tf"), py::arg("omega"));
  m.def("invert", &invert, py::arg("tf"));
  m.def("series", &series);
  m.def("lead_lag", &lead_lag, py::arg("omega_l"), py::arg("omega_f"));
  m.def("pid", &pid, py::arg("kp"), py::arg("omega_i"), py::arg("omega_d"), py::arg("omega_t"), py::arg("omega_lf"));

  py::class_<NotchParams>(m, "NotchParams")
      .def(py::init([](double omega_n, double q1, double q2) { return NotchParams{omega_n, q1, q2}; }),
           py::arg("omega_n"), py::arg("q1"), py::arg("q2"))
      .def_readwrite("omega_n", &NotchParams::omega_n)
      .def_readwrite("q1", &NotchParams::q1)
      .def_readwrite("q2", &NotchParams::q2);
  m.def("notch", &notch, py::arg("params"));

  py::class_<ResetElement>(m, "ResetElement")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, Eigen::RowVectorXd, double, Eigen::VectorXd>(), py::arg("a"),
           py::arg("b"), py::arg("c"), py::arg("d"), py::arg("rho"))
      .def_property_readonly("a", &ResetElement::a)
      .def_property_readonly("b", &ResetElement::b)
      .def_property_readonly("c", &ResetElement::c)
      .def_property_readonly("d", &ResetElement::d)
      .def_property_readonly("rho", &ResetElement::rho)
      .def_property_readonly("states", &ResetElement::states);
  m.def("hosidf", &hosidf, py::arg("element"), py::arg("omega"), py::arg("n"));
  m.def(
      "element_harmonics",
      [](const ResetElement& el, double omega, int n_max) { return spectrum_array(element_harmonics(el, omega, n_max)); },
      py::arg("element"), py::arg("omega"), py::arg("n_max"));

  py::class_<LoopConfig>(m, "LoopConfig")
      .def_readwrite("plant", &LoopConfig::plant)
      .def_readwrite("c_pre", &LoopConfig::c_pre)
      .def_readwrite("c_par", &LoopConfig::c_par)
      .def_readwrite("c_pos", &LoopConfig::c_pos)
      .def_readwrite("element", &LoopConfig::element)
      .def_property_readonly("shaped", [](const LoopConfig& c) { return c.shaping.has_value(); })
      .def("with_filter", [](const LoopConfig& c, const RationalTF& f) { return c.with_shaping(ShapingPair::from_filter(f)); },
           py::arg("f"));

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readonly("loop", &Scenario::loop)
      .def_readonly("n_max", &Scenario::n_max)
      .def_readonly("sigma2_max", &Scenario::sigma2_max)
      .def_property_readonly("grid", [](const Scenario& s) {
        return to_array(std::vector<double>(s.grid.begin(), s.grid.end()));
      });
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("parse_scenario", [](const std::string& text) { return parse_scenario(text); }, py::arg("text"));

  m.def("case_study_reset_loop", [] { return case_study::reset_loop(); });
  m.def("case_study_linear_loop", [] { return case_study::linear_loop(); });
  m.def("reference_notch", &case_study::reference_notch);

  m.def(
      "sensitivity",
      [](const LoopConfig& cfg, double omega, int n_max, bool disturbance) {
        return spectrum_array(LoopAnalyzer(cfg).spectrum(omega, n_max, disturbance ? InputChannel::Disturbance : InputChannel::Reference));
      },
      py::arg("loop"), py::arg("omega"), py::arg("n_max") = kDefaultNMax, py::arg("disturbance") = false,
      "S^n at one frequency; entry n-1 holds order n");
  m.def(
      "sigma2_curve",
      [](const LoopConfig& cfg, const std::vector<double>& omegas, int n_max) {
        return to_array(sigma2_curve(cfg, grid_from(omegas), n_max).values);
      },
      py::arg("loop"), py::arg("omegas"), py::arg("n_max") = kDefaultNMax);
  m.def(
      "psi_curve",
      [](const LoopConfig& cfg, const std::vector<double>& omegas, double sigma2_max, int n_max) {
        return to_array(psi_curve(cfg, grid_from(omegas), n_max, sigma2_max).values);
      },
      py::arg("loop"), py::arg("omegas"), py::arg("sigma2_max"), py::arg("n_max") = kDefaultNMax);
  m.def(
      "verify_bound",
      [](const LoopConfig& cfg, const RationalTF& f, const std::vector<double>& omegas, double sigma2_max, int n_max) {
        const auto r = verify_bound(cfg, f, grid_from(omegas), sigma2_max, n_max);
        py::dict d;
        d["feasible"] = r.feasible;
        d["direct_feasible"] = r.direct_feasible;
        d["min_margin"] = r.min_margin;
        d["margin"] = to_array(r.margin);
        d["product"] = to_array(r.product);
        d["k_m"] = r.k_m;
        d["sigma2_after"] = to_array(r.sigma2_after);
        return d;
      },
      py::arg("loop"), py::arg("f"), py::arg("omegas"), py::arg("sigma2_max"), py::arg("n_max") = kDefaultNMax);
  m.def(
      "design_notch",
      [](const LoopConfig& cfg, const std::vector<double>& omegas, double sigma2_max, double omega_lo, double omega_hi,
         double q_lo, double q_hi, int n_max) {
        const auto grid = grid_from(omegas);
        const auto spectra = spectrum_sweep(cfg, grid, n_max);
        const auto r = search_notch(psi_curve(spectra, grid, sigma2_max), spectra, NotchSearchBox{omega_lo, omega_hi, q_lo, q_hi});
        py::dict d;
        d["params"] = r.params;
        d["feasible"] = r.feasible;
        d["min_margin"] = r.min_margin;
        return d;
      },
      py::arg("loop"), py::arg("omegas"), py::arg("sigma2_max"), py::arg("omega_lo"), py::arg("omega_hi"),
      py::arg("q_lo") = 0.5, py::arg("q_hi") = 20.0, py::arg("n_max") = kDefaultNMax);
  m.def(
      "simulate_steady",
      [](const LoopConfig& cfg, double frequency_hz, double amplitude, double ts, bool disturbance, int n_max) {
        const InputDescriptor in{disturbance ? InputChannel::Disturbance : InputChannel::Reference, amplitude, frequency_hz};
        const auto r = simulate_steady(cfg, in, ts);
        py::dict d;
        d["settled"] = r.settled;
        d["steady_start"] = r.steady_start;
        d["warnings"] = r.warnings;
        for (const auto& [k, v] : {std::pair{"e", &r.e}, {"e_r", &r.e_r}, {"u_r", &r.u_r}, {"u", &r.u}, {"y", &r.y}})
          d[k] = to_array(*v);
        d["reset_instants"] = r.reset_instants;
        if (r.settled) {
          d["harmonics"] = spectrum_array(steady_harmonics(r, frequency_hz, n_max));
          d["sigma2_measured"] = sigma2_measured(r, frequency_hz);
        }
        return d;
      },
      py::arg("loop"), py::arg("frequency_hz"), py::arg("amplitude") = 32e-6, py::arg("ts") = 5e-5,
      py::arg("disturbance") = false, py::arg("n_max") = 9);
  m.def("snap_frequency", &snap_frequency, py::arg("frequency_hz"), py::arg("ts"));
  m.def("sigma2", [](const std::vector<cplx>& odd_and_even) {
    // entry n-1 holds order n, as returned by sensitivity()
    const int n_max = static_cast<int>(odd_and_even.size()) | 1;
    HarmonicSpectrum s(1.0, n_max);
    for (int n = 1; n <= static_cast<int>(odd_and_even.size()); n += 2) s.set(n, odd_and_even[n - 1]);
    return sigma2(s);
  }, py::arg("spectrum"));
}
