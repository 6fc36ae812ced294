#include <algorithm>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmsmsim/config.hpp"
#include "pmsmsim/csv_io.hpp"
#include "pmsmsim/demod.hpp"
#include "pmsmsim/errors.hpp"
#include "pmsmsim/estimator.hpp"
#include "pmsmsim/observability.hpp"
#include "pmsmsim/presets.hpp"

namespace py = pybind11;
using namespace pmsm;

namespace {

py::array_t<double> as_array(const std::vector<double>& v) {
  auto* holder = new std::vector<double>(v);
  py::capsule owner(holder, [](void* p) {
    delete static_cast<std::vector<double>*>(p);
  });
  return py::array_t<double>({static_cast<py::ssize_t>(holder->size())},
                             {static_cast<py::ssize_t>(sizeof(double))},
                             holder->data(), owner);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Saturated-PMSM sensorless estimation simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_RuntimeError);

  py::enum_<Waveform>(m, "Waveform")
      .value("SquareWave", Waveform::SquareWave)
      .value("Sinusoid", Waveform::Sinusoid);

  py::class_<MagModel>(m, "MagModel")
      .def(py::init<>())
      .def_readwrite("Ld", &MagModel::Ld)
      .def_readwrite("Lq", &MagModel::Lq)
      .def_readwrite("lambda_m", &MagModel::lambda_m)
      .def_readwrite("alpha30", &MagModel::alpha30)
      .def_readwrite("alpha12", &MagModel::alpha12)
      .def_readwrite("alpha40", &MagModel::alpha40)
      .def_readwrite("alpha22", &MagModel::alpha22)
      .def_readwrite("alpha04", &MagModel::alpha04)
      .def("unsaturated", &MagModel::unsaturated)
      .def("scaled_saturation", &MagModel::scaled_saturation)
      .def("magnet_flux", &MagModel::magnet_flux);

  py::class_<MotorParams>(m, "MotorParams")
      .def(py::init<>())
      .def_readwrite("mag", &MotorParams::mag)
      .def_readwrite("R", &MotorParams::R)
      .def_readwrite("n", &MotorParams::n)
      .def_readwrite("J", &MotorParams::J);

  py::class_<MotorStateGd>(m, "MotorStateGd")
      .def(py::init<>())
      .def_readwrite("phi_gd", &MotorStateGd::phi_gd)
      .def_readwrite("omega", &MotorStateGd::omega)
      .def_readwrite("theta", &MotorStateGd::theta)
      .def_readwrite("theta_c", &MotorStateGd::theta_c);

  py::class_<InjectionSpec>(m, "InjectionSpec")
      .def(py::init<>())
      .def_readwrite("u_tilde", &InjectionSpec::u_tilde)
      .def_readwrite("omega_inj", &InjectionSpec::omega_inj)
      .def_readwrite("waveform", &InjectionSpec::waveform)
      .def("period", &InjectionSpec::period);

  py::class_<PiecewiseLinear>(m, "PiecewiseLinear")
      .def(py::init<std::vector<double>, std::vector<double>>())
      .def_static("constant", &PiecewiseLinear::constant)
      .def("__call__", &PiecewiseLinear::operator());

  py::class_<DriveProfiles>(m, "DriveProfiles")
      .def(py::init<>())
      .def_readwrite("omega_c", &DriveProfiles::omega_c)
      .def_readwrite("u_rd_gamma", &DriveProfiles::u_rd_gamma)
      .def_readwrite("u_rd_delta", &DriveProfiles::u_rd_delta)
      .def_readwrite("tau_load", &DriveProfiles::tau_load);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("params", &ScenarioConfig::params)
      .def_readwrite("profiles", &ScenarioConfig::profiles)
      .def_readwrite("inj", &ScenarioConfig::inj)
      .def_readwrite("t_end", &ScenarioConfig::t_end)
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("initial", &ScenarioConfig::initial)
      .def_readwrite("current_noise_std", &ScenarioConfig::current_noise_std)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def("validate", &ScenarioConfig::validate);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("dt", [](const Trajectory& t) { return t.dt; })
      .def_property_readonly("t", [](const Trajectory& t) { return as_array(t.t); })
      .def_property_readonly("phi_gamma", [](const Trajectory& t) { return as_array(t.phi_gamma); })
      .def_property_readonly("phi_delta", [](const Trajectory& t) { return as_array(t.phi_delta); })
      .def_property_readonly("omega", [](const Trajectory& t) { return as_array(t.omega); })
      .def_property_readonly("theta", [](const Trajectory& t) { return as_array(t.theta); })
      .def_property_readonly("theta_c", [](const Trajectory& t) { return as_array(t.theta_c); })
      .def_property_readonly("i_gamma", [](const Trajectory& t) { return as_array(t.i_gamma); })
      .def_property_readonly("i_delta", [](const Trajectory& t) { return as_array(t.i_delta); })
      .def_property_readonly("u_gamma", [](const Trajectory& t) { return as_array(t.u_gamma); })
      .def_property_readonly("u_delta", [](const Trajectory& t) { return as_array(t.u_delta); })
      .def_property_readonly("i_bar_gamma", [](const Trajectory& t) { return as_array(t.i_bar_gamma); })
      .def_property_readonly("i_bar_delta", [](const Trajectory& t) { return as_array(t.i_bar_delta); })
      .def_property_readonly("i_tilde_gamma", [](const Trajectory& t) { return as_array(t.i_tilde_gamma); })
      .def_property_readonly("i_tilde_delta", [](const Trajectory& t) { return as_array(t.i_tilde_delta); })
      .def_property_readonly("theta_hat", [](const Trajectory& t) { return as_array(t.theta_hat); })
      .def_property_readonly("err_deg", [](const Trajectory& t) { return as_array(t.err_deg); })
      .def_property_readonly("est_valid",
                             [](const Trajectory& t) {
                               std::vector<double> v(t.est_valid.begin(),
                                                     t.est_valid.end());
                               return as_array(v);
                             })
      .def("__len__", &Trajectory::size);

  // Magnetics.
  m.def("rotation", &rotation, py::arg("mu"));
  m.def("skew90", &skew90);
  m.def("energy", &energy, py::arg("phi"), py::arg("model"));
  m.def("current_from_flux", &current_from_flux, py::arg("phi"), py::arg("model"));
  m.def("flux_from_current_first_order", &flux_from_current_first_order,
        py::arg("i"), py::arg("model"));
  m.def("flux_from_current_exact",
        py::overload_cast<const CurrentDq&, const MagModel&>(&flux_from_current_exact),
        py::arg("i"), py::arg("model"));
  m.def("hessian", &hessian, py::arg("phi"), py::arg("model"));
  m.def("g_matrix_of_current", &g_matrix_of_current, py::arg("i"), py::arg("model"));
  m.def("inductance_matrix", &inductance_matrix, py::arg("i"), py::arg("model"));
  m.def("saliency_matrix", &saliency_matrix, py::arg("mu"), py::arg("i_bar"),
        py::arg("model"));

  // Dynamics.
  m.def("f_eval", &f_eval, py::arg("sigma"), py::arg("waveform"));
  m.def("f_primitive", &f_primitive, py::arg("sigma"), py::arg("waveform"));
  m.def("vf_control", &vf_control, py::arg("t"), py::arg("profiles"),
        py::arg("injection"), py::arg("model"));

  // Simulation.
  m.def("run_closed_loop",
        [](const ScenarioConfig& cfg) {
          const VfController ctrl(cfg.profiles, cfg.params.mag);
          return run_closed_loop(cfg, ctrl);
        },
        py::arg("config"), "Run the V/f closed loop with injection");
  m.def("run_averaged",
        [](const ScenarioConfig& cfg) {
          const VfController ctrl(cfg.profiles, cfg.params.mag);
          return run_averaged(cfg, ctrl);
        },
        py::arg("config"));
  m.def("verify_averaging",
        [](const ScenarioConfig& cfg, const std::vector<double>& omegas) {
          const VfController ctrl(cfg.profiles, cfg.params.mag);
          py::list rows;
          for (const AveragingRow& r : verify_averaging(cfg, ctrl, omegas)) {
            py::dict d;
            d["omega_inj"] = r.omega_inj;
            d["e_mech"] = r.e_mech;
            d["e_flux"] = r.e_flux;
            d["e_flux_raw"] = r.e_flux_raw;
            rows.append(d);
          }
          return rows;
        },
        py::arg("config"), py::arg("omegas"));
  m.def("vf_equilibrium", &vf_equilibrium, py::arg("omega_c"), py::arg("u_slow"),
        py::arg("tau_L"), py::arg("params"));

  // Demodulation.
  py::class_<DemodConfig>(m, "DemodConfig")
      .def(py::init<double, double, Waveform>(), py::arg("omega_inj"),
           py::arg("dt"), py::arg("waveform"))
      .def_readonly("window", &DemodConfig::window);
  m.def("sliding_mean",
        [](const Eigen::Matrix2Xd& samples, const DemodConfig& cfg) {
          const DemodResult r = sliding_mean(samples, cfg);
          return py::make_tuple(r.values, r.first_valid);
        },
        py::arg("samples"), py::arg("config"));
  m.def("sliding_correlate",
        [](const Eigen::Matrix2Xd& samples, const DemodConfig& cfg) {
          const DemodResult r = sliding_correlate(samples, cfg);
          return py::make_tuple(r.values, r.first_valid);
        },
        py::arg("samples"), py::arg("config"));

  // Estimation.
  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init<>())
      .def_readwrite("mag", &EstimatorConfig::mag)
      .def_readwrite("grid_size", &EstimatorConfig::grid_size)
      .def_readwrite("refine_tol", &EstimatorConfig::refine_tol)
      .def_readwrite("continuity_window", &EstimatorConfig::continuity_window);

  py::class_<PositionEstimate>(m, "PositionEstimate")
      .def_readonly("theta_hat", &PositionEstimate::theta_hat)
      .def_readonly("mu", &PositionEstimate::mu)
      .def_readonly("residual", &PositionEstimate::residual)
      .def_readonly("runner_up_mu", &PositionEstimate::runner_up_mu)
      .def_readonly("runner_up_residual", &PositionEstimate::runner_up_residual)
      .def_readonly("ambiguous", &PositionEstimate::ambiguous);

  m.def("residual", &residual, py::arg("mu"), py::arg("i_tilde"),
        py::arg("i_bar"), py::arg("u_tilde"), py::arg("omega_inj"),
        py::arg("model"));
  m.def("estimate",
        [](const Vec2& i_tilde, const Vec2& i_bar, const Vec2& u_tilde,
           double omega_inj, double theta_c, py::object prev,
           const EstimatorConfig& cfg) {
          std::optional<double> p;
          if (!prev.is_none()) p = prev.cast<double>();
          return estimate(i_tilde, i_bar, u_tilde, omega_inj, theta_c, p, cfg);
        },
        py::arg("i_tilde"), py::arg("i_bar"), py::arg("u_tilde"),
        py::arg("omega_inj"), py::arg("theta_c"), py::arg("prev") = py::none(),
        py::arg("config"));
  m.def("estimate_trajectory", &estimate_trajectory, py::arg("trajectory"),
        py::arg("injection"), py::arg("config"));

  // Observability.
  py::class_<PermanentTrajectory>(m, "PermanentTrajectory")
      .def_readonly("omega", &PermanentTrajectory::omega)
      .def_readonly("i_dq", &PermanentTrajectory::i_dq)
      .def_readonly("phi_dq", &PermanentTrajectory::phi_dq)
      .def_readonly("u_dq", &PermanentTrajectory::u_dq)
      .def_readonly("tau_L", &PermanentTrajectory::tau_L);

  py::class_<LinearizedSystem>(m, "LinearizedSystem")
      .def(py::init<>())
      .def_readwrite("A", &LinearizedSystem::A)
      .def_readwrite("B", &LinearizedSystem::B)
      .def_readwrite("C", &LinearizedSystem::C);

  m.def("permanent_trajectory", &permanent_trajectory, py::arg("omega_bar"),
        py::arg("i_bar"), py::arg("params"));
  m.def("phi_vector", &phi_vector, py::arg("phi_bar"), py::arg("model"));
  m.def("linearize", &linearize, py::arg("trajectory"), py::arg("params"));
  m.def("observability_rank",
        [](const LinearizedSystem& sys) {
          const ObservabilityResult r = observability_rank(sys);
          py::list basis;
          for (const auto& v : r.unobservable_basis) basis.append(v);
          py::dict d;
          d["rank"] = r.rank;
          d["unobservable_basis"] = basis;
          d["singular_values"] = r.singular_values;
          return d;
        },
        py::arg("system"));

  // Presets, config files, CSV.
  py::class_<RunReport>(m, "RunReport")
      .def_readonly("scenario", &RunReport::scenario)
      .def_readonly("runtime_s", &RunReport::runtime_s)
      .def_readonly("max_err_deg_sat", &RunReport::max_err_deg_sat)
      .def_readonly("mean_err_deg_sat", &RunReport::mean_err_deg_sat)
      .def_readonly("max_err_deg_unsat", &RunReport::max_err_deg_unsat)
      .def_readonly("mean_err_deg_unsat", &RunReport::mean_err_deg_unsat);

  m.def("table1_params", &table1_params);
  m.def("table1_injection", &table1_injection);
  m.def("rated_current", &rated_current);
  m.def("rated_torque", &rated_torque);
  m.def("rated_speed_elec", &rated_speed_elec);
  m.def("long_test_scenario", &long_test_scenario);
  m.def("speed_reversal_scenario", &speed_reversal_scenario);
  m.def("run_preset",
        [](const std::string& name, const std::string& out_dir,
           std::uint64_t seed, bool no_saturation_estimator) {
          PresetOptions opts;
          opts.out_dir = out_dir;
          opts.seed = seed;
          opts.no_saturation_estimator = no_saturation_estimator;
          return run_preset(name, opts);
        },
        py::arg("name"), py::arg("out_dir") = ".", py::arg("seed") = 0,
        py::arg("no_saturation_estimator") = false);
  m.def("load_config",
        [](const std::string& path) {
          const LoadedConfig lc = load_config(path);
          return py::make_tuple(lc.scenario, lc.estimator);
        },
        py::arg("path"));
  m.def("emit_csv", &emit_csv, py::arg("trajectory"), py::arg("path"));
  m.def("parse_csv", &parse_csv, py::arg("path"));
  m.def("wrap_angle", &wrap_angle, py::arg("angle"));
}
