#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <sstream>

#include "radforce/cli_runner.hpp"
#include "radforce/errors.hpp"
#include "radforce/floquet_solver.hpp"
#include "radforce/frame_rotation.hpp"
#include "radforce/obe_matrices.hpp"
#include "radforce/regimes.hpp"
#include "radforce/time_oracle.hpp"

namespace py = pybind11;
using namespace radforce;

namespace {

HalfInt half(double j) {
  const double twice = 2.0 * j;
  if (std::abs(twice - std::round(twice)) > 1e-12) {
    throw Error(ErrorCode::Domain, "angular momentum must be a multiple of 1/2");
  }
  return HalfInt::from_twice(static_cast<int>(std::lround(twice)));
}

ObeMatrices matrices_for(const AtomicTransition& t, const FieldSet& f) {
  t.validate();
  return build_obe_matrices(StateLayout(t), f);
}

// Complex rates as an (N, 2H+1) array, column H being the mean.
Eigen::MatrixXcd rate_array(const std::vector<std::vector<cplx>>& R) {
  if (R.empty()) return {};
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(R.size()), static_cast<Eigen::Index>(R[0].size()));
  for (std::size_t j = 0; j < R.size(); ++j) {
    for (std::size_t n = 0; n < R[j].size(); ++n) out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = R[j][n];
  }
  return out;
}

py::dict table_dict(const ResultTable& t) {
  py::dict d;
  d["label_column"] = t.label_column;
  d["columns"] = t.columns;
  d["labels"] = t.labels;
  d["rows"] = t.rows;
  d["status"] = t.status;
  d["metadata"] = t.metadata;
  std::ostringstream s;
  write_table(s, t);
  d["text"] = s.str();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Radiation-pressure forces on multilevel atoms";

  // Kept alive for the life of the interpreter; carries the error code name.
  static py::handle error = PyErr_NewException("radforce._core.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = error;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string code(error_code_name(e.code()));
      py::object inst = py::reinterpret_borrow<py::object>(error)(code + ": " + e.what());
      inst.attr("code") = code;
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  py::class_<AtomicTransition>(m, "Transition")
      .def(py::init([](double jg, double je, double gamma) {
             AtomicTransition t{half(jg), half(je), gamma, false};
             t.validate();
             return t;
           }),
           py::arg("jg"), py::arg("je"), py::arg("gamma") = 1.0)
      .def_static("two_level", &AtomicTransition::two_level, py::arg("gamma") = 1.0)
      .def_property_readonly("jg", [](const AtomicTransition& t) { return t.Jg.value(); })
      .def_property_readonly("je", [](const AtomicTransition& t) { return t.Je.value(); })
      .def_property_readonly("gamma", [](const AtomicTransition& t) { return t.gamma; })
      .def_property_readonly("two_level_override", [](const AtomicTransition& t) { return t.two_level_override; })
      .def_property_readonly("delta_J", &AtomicTransition::delta_J)
      .def("__repr__", [](const AtomicTransition& t) {
        return t.two_level_override ? std::string("Transition.two_level()")
                                    : "Transition(" + t.Jg.str() + " -> " + t.Je.str() + ")";
      });

  auto pol = m.def_submodule("polarization", "spherical components, slots q = -1, 0, +1");
  pol.def("pi", &polarization::pi);
  pol.def("sigma_plus", &polarization::sigma_plus);
  pol.def("sigma_minus", &polarization::sigma_minus);
  pol.def("elliptical", &polarization::elliptical, py::arg("theta"), py::arg("phi"));
  pol.def("from_cartesian", &polarization::from_cartesian);
  pol.def("to_cartesian", &polarization::to_cartesian);

  py::class_<PlaneWave>(m, "PlaneWave")
      .def(py::init([](cplx rabi, double detuning, const Polarization& p, const Vec3& k_dir, double k_mag) {
             PlaneWave w;
             w.rabi = rabi;
             w.detuning = detuning;
             w.pol = p;
             w.k_dir = k_dir;
             w.k_mag = k_mag;
             return w;
           }),
           py::arg("rabi"), py::arg("detuning") = 0.0, py::arg("pol") = polarization::pi(),
           py::arg("k_dir") = Vec3(0.0, 0.0, 1.0), py::arg("k_mag") = 1.0)
      .def_readwrite("rabi", &PlaneWave::rabi)
      .def_readwrite("detuning", &PlaneWave::detuning)
      .def_readwrite("pol", &PlaneWave::pol)
      .def_readwrite("k_dir", &PlaneWave::k_dir)
      .def_readwrite("k_mag", &PlaneWave::k_mag);

  py::class_<FieldSet>(m, "FieldSet")
      .def(py::init([](std::vector<PlaneWave> waves, std::vector<double> kappa, int max_denominator, double tol) {
             return FieldSet(std::move(waves), std::move(kappa), CommensurabilityOptions{max_denominator, tol});
           }),
           py::arg("waves"), py::arg("kappa") = std::vector<double>{}, py::arg("max_denominator") = 64,
           py::arg("tol") = 1e-9)
      .def_property_readonly("waves", &FieldSet::waves)
      .def_property_readonly("kappa", &FieldSet::kappa)
      .def_property_readonly("omega_c", &FieldSet::omega_c)
      .def_property_readonly("deltabar", &FieldSet::deltabar)
      .def_property_readonly("stationary", &FieldSet::stationary)
      .def_property_readonly("period", &FieldSet::period)
      .def_property_readonly("harmonic_index", [](const FieldSet& f) { return f.commensurability().m; })
      .def("__len__", &FieldSet::size);

  m.def("doppler_shift", &doppler_shift, py::arg("field"), py::arg("velocity"));

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("n_max_init", &SolverOptions::n_max_init)
      .def_readwrite("n_max_cap", &SolverOptions::n_max_cap)
      .def_readwrite("tol", &SolverOptions::tol)
      .def_readwrite("cond_limit", &SolverOptions::cond_limit)
      .def_readwrite("harmonics", &SolverOptions::harmonics)
      .def_readwrite("reduce_pure_polarization", &SolverOptions::reduce_pure_polarization);

  py::class_<PeriodicSolution>(m, "Solution")
      .def_readonly("n_max", &PeriodicSolution::n_max)
      .def_readonly("harmonics", &PeriodicSolution::harmonics)
      .def_readonly("residual", &PeriodicSolution::residual)
      .def_readonly("total_force", &PeriodicSolution::total_force)
      .def_readonly("mean_force", &PeriodicSolution::mean_force)
      .def_property_readonly("rates", [](const PeriodicSolution& s) { return rate_array(s.R); })
      .def("rate", &PeriodicSolution::rate, py::arg("j"), py::arg("n"))
      .def("mean_rate", &PeriodicSolution::mean_rate, py::arg("j"));

  m.def(
      "solve",
      [](const AtomicTransition& t, const FieldSet& f, const SolverOptions& o) {
        return solve_periodic(f, matrices_for(t, f), o);
      },
      py::arg("transition"), py::arg("field"), py::arg("options") = SolverOptions{},
      "Periodic regime from the harmonic recursion.");

  m.def(
      "oracle_rates",
      [](const AtomicTransition& t, const FieldSet& f, int harmonics) {
        return rate_array(oracle_harmonics(f, matrices_for(t, f), harmonics).R);
      },
      py::arg("transition"), py::arg("field"), py::arg("harmonics") = 3,
      "Rate harmonics from direct time integration, shape (N, 2 harmonics + 1).");

  m.def(
      "floquet_exponents",
      [](const AtomicTransition& t, const FieldSet& f) {
        const FloquetSpectrum s = monodromy(f, matrices_for(t, f));
        return py::make_tuple(s.exponents, s.lambda_max);
      },
      py::arg("transition"), py::arg("field"));

  m.def(
      "saturation_params",
      [](const AtomicTransition& t, int q) {
        const GaoParams g = gao_params(t, q);
        return py::make_tuple(g.a, g.b);
      },
      py::arg("transition"), py::arg("q") = 0, "(a, b) of the single-frequency saturation law.");

  m.def(
      "single_wave_rate",
      [](const AtomicTransition& t, double s, const Polarization& p, double delta) {
        t.validate();
        return single_wave_rate(StateLayout(t), s, p, delta);
      },
      py::arg("transition"), py::arg("s"), py::arg("pol"), py::arg("detuning") = 0.0);

  m.def(
      "rotate_field",
      [](const FieldSet& f, double a, double b, double g) { return rotate_field(f, {a, b, g}); },
      py::arg("field"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"));

  m.def(
      "covariance_residual",
      [](const AtomicTransition& t, const FieldSet& f, double a, double b, double g) {
        return verify_covariance(f, matrices_for(t, f), {a, b, g}).max();
      },
      py::arg("transition"), py::arg("field"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"));

  m.def(
      "clebsch_gordan",
      [](double j1, double m1, double j2, double m2, double J, double M) {
        return clebsch_gordan(half(j1), half(m1), half(j2), half(m2), half(J), half(M));
      },
      py::arg("j1"), py::arg("m1"), py::arg("j2"), py::arg("m2"), py::arg("J"), py::arg("M"));
  m.def(
      "wigner_small_d",
      [](double J, double mm, double mp, double beta) { return wigner_small_d(half(J), half(mm), half(mp), beta); },
      py::arg("J"), py::arg("m"), py::arg("mp"), py::arg("beta"));

  m.def(
      "run",
      [](const std::string& command, const std::string& config, int threads, std::uint64_t seed) {
        const RunOptions opt{threads, seed};
        if (command == "force") return table_dict(run_force(parse_scenario(config)));
        if (command == "scan") return table_dict(run_scan(parse_scenario(config), opt));
        if (command == "gao-table") return table_dict(run_gao_table(parse_scenario(config, true)));
        if (command == "check") {
          if (config.empty()) return table_dict(run_check("all", nullptr, opt));
          const Scenario sc = parse_scenario(config);
          return table_dict(run_check("scenario", &sc, opt));
        }
        throw Error(ErrorCode::Validation, "unknown command '" + command + "'");
      },
      py::arg("command"), py::arg("config") = "", py::arg("threads") = 1, py::arg("seed") = 12345,
      "Same tables as the command-line tool, from config text.");
}
