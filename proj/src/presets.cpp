#include "pmsmsim/presets.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pmsmsim/csv_io.hpp"
#include "pmsmsim/errors.hpp"
#include "pmsmsim/estimator.hpp"

namespace pmsm {

namespace {

using nlohmann::json;

// Datasheet values of the test motor.
constexpr double kLd = 7.9e-3;
constexpr double kLq = 8.2e-3;
constexpr double kLambda = 0.155;
constexpr double kR = 2.1;
constexpr int kPolePairs = 5;
constexpr double kRatedCurrent = 5.19;        // A peak
constexpr double kRatedTorque = 6.06;         // N m
constexpr double kRatedSpeedRpm = 3000.0;     // mechanical
constexpr double kInertia = 1e-3;             // kg m^2 (not in datasheet)
constexpr double kInjectionVolts = 15.0;
constexpr double kInjectionHz = 500.0;

// Normalized saturation products as printed in the datasheet.
constexpr double kA30n = 0.0551;  // alpha30 * Ld^2 * In
constexpr double kA12n = 0.0545;  // alpha12 * Ld * Lq * In
constexpr double kA40n = 0.0170;  // alpha40 * Ld^3 * In^2
constexpr double kA22n = 0.0249;  // alpha22 * Ld * Lq^2 * In^2
constexpr double kA04n = 0.0067;  // alpha04 * Lq^3 * In^2

// q current holding a given torque for the unsaturated model; the
// saturated correction is a few percent and irrelevant for voltage
// compensation.
double iq_for_torque(double tau) {
  return tau / (1.5 * kPolePairs * kLambda);
}

// Standing gamma-axis current command. Pure q-axis compensation would
// sit exactly at the pull-out torque; the gamma component buys static
// margin and keeps the load angle near zero, like the hardware's
// two-component resistive-drop compensation.
constexpr double kGammaBias = 1.56;         // A
constexpr double kGammaPerDelta = 0.5;      // A per A of torque current

double ig_for_torque(double tau) {
  return kGammaBias + kGammaPerDelta * iq_for_torque(tau);
}

}  // namespace

double rated_current() { return kRatedCurrent; }
double rated_torque() { return kRatedTorque; }
double rated_speed_elec() {
  return kRatedSpeedRpm * 2.0 * M_PI / 60.0 * kPolePairs;
}

MotorParams table1_params() {
  MagModel mag;
  mag.Ld = kLd;
  mag.Lq = kLq;
  mag.lambda_m = kLambda;
  const double in = kRatedCurrent;
  mag.alpha30 = kA30n / (kLd * kLd * in);
  mag.alpha12 = kA12n / (kLd * kLq * in);
  mag.alpha40 = kA40n / (kLd * kLd * kLd * in * in);
  mag.alpha22 = kA22n / (kLd * kLq * kLq * in * in);
  mag.alpha04 = kA04n / (kLq * kLq * kLq * in * in);
  return MotorParams{mag, kR, kPolePairs, kInertia};
}

InjectionSpec table1_injection() {
  InjectionSpec inj;
  inj.u_tilde = Vec2(kInjectionVolts, 0.0);
  inj.omega_inj = 2.0 * M_PI * kInjectionHz;
  inj.waveform = Waveform::SquareWave;
  return inj;
}

namespace {

ScenarioConfig make_scenario(DriveProfiles profiles, double t_end) {
  ScenarioConfig cfg;
  cfg.params = table1_params();
  cfg.profiles = std::move(profiles);
  cfg.inj = table1_injection();
  cfg.t_end = t_end;
  cfg.dt = cfg.inj.period() / 64.0;
  const double wc0 = cfg.profiles.omega_c(0.0);
  const Vec2 u_slow0 = cfg.profiles.u_rd(0.0) +
                       wc0 * Vec2(0.0, cfg.params.mag.lambda_m);
  cfg.initial =
      vf_equilibrium(wc0, u_slow0, cfg.profiles.tau_load(0.0), cfg.params);
  return cfg;
}

}  // namespace

ScenarioConfig long_test_scenario() {
  const double w2 = 0.02 * rated_speed_elec();
  const double tau = 1.5 * kRatedTorque;
  const std::vector<double> knots{0.0, 0.8, 1.05, 2.9, 3.15, 4.0};
  const std::vector<double> tau_lvl{0.0, 0.0, tau, tau, 0.0, 0.0};
  std::vector<double> urd_g(knots.size()), urd_d(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    urd_g[k] = kR * ig_for_torque(tau_lvl[k]);
    urd_d[k] = kR * iq_for_torque(tau_lvl[k]);
  }
  DriveProfiles p;
  p.omega_c = PiecewiseLinear({0.0, 1.2, 2.0, 2.8, 3.6, 4.0},
                              {w2, w2, -w2, -w2, 0.5 * w2, 0.5 * w2});
  p.tau_load = PiecewiseLinear(knots, tau_lvl);
  p.u_rd_gamma = PiecewiseLinear(knots, urd_g);
  p.u_rd_delta = PiecewiseLinear(knots, urd_d);
  return make_scenario(std::move(p), 4.0);
}

ScenarioConfig speed_reversal_scenario() {
  const double w02 = 0.002 * rated_speed_elec();
  const double tau = 1.5 * kRatedTorque;
  DriveProfiles p;
  p.omega_c = PiecewiseLinear({0.0, 0.5, 3.5, 4.0}, {-w02, -w02, w02, w02});
  p.tau_load = PiecewiseLinear({0.0, 4.0}, {tau, tau});
  p.u_rd_gamma = PiecewiseLinear::constant(kR * ig_for_torque(tau));
  p.u_rd_delta = PiecewiseLinear::constant(kR * iq_for_torque(tau));
  return make_scenario(std::move(p), 4.0);
}

double max_abs_error_deg(const Trajectory& traj) {
  double m = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.est_valid[k]) m = std::max(m, std::abs(traj.err_deg[k]));
  }
  return m;
}

double mean_abs_error_deg(const Trajectory& traj) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.est_valid[k]) {
      acc += std::abs(traj.err_deg[k]);
      ++n;
    }
  }
  return n ? acc / n : 0.0;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void write_column_manifest(const std::string& path) {
  json cols = json::array();
  const auto add = [&](const char* name, const char* unit, const char* desc) {
    cols.push_back({{"name", name}, {"unit", unit}, {"description", desc}});
  };
  add("t", "s", "sample time");
  add("phi_gamma", "Wb", "current-produced flux, gamma axis");
  add("phi_delta", "Wb", "current-produced flux, delta axis");
  add("omega", "rad/s", "electrical rotor speed");
  add("theta", "rad", "electrical rotor angle, unwrapped");
  add("theta_c", "rad", "controller frame angle, unwrapped");
  add("i_gamma", "A", "recorded stator current, gamma axis");
  add("i_delta", "A", "recorded stator current, delta axis");
  add("u_gamma", "V", "applied voltage, gamma axis");
  add("u_delta", "V", "applied voltage, delta axis");
  add("i_bar_gamma", "A", "demodulated slow current, gamma axis");
  add("i_bar_delta", "A", "demodulated slow current, delta axis");
  add("i_tilde_gamma", "A", "demodulated ripple envelope, gamma axis");
  add("i_tilde_delta", "A", "demodulated ripple envelope, delta axis");
  add("theta_hat", "rad", "estimated electrical rotor angle");
  add("err_deg", "deg", "wrapped estimation error, electrical degrees");
  write_text(path, cols.dump(2) + "\n");
}

json report_to_json(const RunReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["runtime_s"] = r.runtime_s;
  if (r.max_err_deg_sat) {
    j["saturated_estimator"] = {{"max_err_deg", *r.max_err_deg_sat},
                                {"mean_err_deg", *r.mean_err_deg_sat}};
  }
  if (r.max_err_deg_unsat) {
    j["unsaturated_estimator"] = {{"max_err_deg", *r.max_err_deg_unsat},
                                  {"mean_err_deg", *r.mean_err_deg_unsat}};
  }
  if (!r.averaging.empty()) {
    json rows = json::array();
    for (const auto& row : r.averaging) {
      rows.push_back({{"omega_inj", row.omega_inj},
                      {"e_mech", row.e_mech},
                      {"e_flux", row.e_flux},
                      {"e_flux_raw", row.e_flux_raw}});
    }
    j["averaging"] = rows;
  }
  if (!r.ranks.empty()) {
    json rows = json::array();
    for (const auto& pt : r.ranks) {
      rows.push_back({{"omega_bar", pt.omega_bar},
                      {"torque_fraction", pt.torque_fraction},
                      {"rank", pt.rank},
                      {"kernel_off_plane", pt.kernel_off_plane}});
    }
    j["observability"] = rows;
  }
  return j;
}

ScenarioConfig apply_options(ScenarioConfig cfg, const PresetOptions& opts) {
  cfg.seed = opts.seed;
  if (opts.omega_inj_hz) {
    cfg.inj.omega_inj = 2.0 * M_PI * *opts.omega_inj_hz;
    cfg.dt = cfg.inj.period() / 64.0;
  }
  return cfg;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

RunReport run_estimation_preset(const std::string& name, ScenarioConfig cfg,
                                const PresetOptions& opts) {
  RunReport report;
  report.scenario = name;
  std::filesystem::create_directories(opts.out_dir);

  const VfController ctrl(cfg.profiles, cfg.params.mag);
  const Trajectory base = run_closed_loop(cfg, ctrl);

  EstimatorConfig est;
  est.mag = cfg.params.mag;
  if (!opts.no_saturation_estimator) {
    Trajectory traj = base;
    estimate_trajectory(traj, cfg.inj, est);
    report.max_err_deg_sat = max_abs_error_deg(traj);
    report.mean_err_deg_sat = mean_abs_error_deg(traj);
    emit_csv(traj, join(opts.out_dir, name + "_sat.csv"));
  }
  {
    Trajectory traj = base;
    EstimatorConfig unsat = est;
    unsat.mag = est.mag.unsaturated();
    estimate_trajectory(traj, cfg.inj, unsat);
    report.max_err_deg_unsat = max_abs_error_deg(traj);
    report.mean_err_deg_unsat = mean_abs_error_deg(traj);
    emit_csv(traj, join(opts.out_dir, name + "_nosat.csv"));
  }
  write_column_manifest(join(opts.out_dir, name + "_columns.json"));
  return report;
}

RunReport run_averaging_sweep(const PresetOptions& opts) {
  RunReport report;
  report.scenario = "averaging_sweep";
  std::filesystem::create_directories(opts.out_dir);
  ScenarioConfig cfg = apply_options(long_test_scenario(), opts);
  const VfController ctrl(cfg.profiles, cfg.params.mag);
  const std::vector<double> omegas{2.0 * M_PI * 250.0, 2.0 * M_PI * 500.0,
                                   2.0 * M_PI * 1000.0};
  report.averaging = verify_averaging(cfg, ctrl, omegas);
  return report;
}

RunReport run_observability_sweep(const PresetOptions& opts) {
  RunReport report;
  report.scenario = "observability_sweep";
  std::filesystem::create_directories(opts.out_dir);
  const MotorParams params = table1_params();

  // q current reaching a target torque for the saturated model.
  const auto iq_exact = [&](double tau) {
    double lo = -4.0 * kRatedCurrent, hi = 4.0 * kRatedCurrent;
    const auto torque_of = [&](double iq) {
      return permanent_trajectory(0.0, CurrentDq(0.0, iq), params).tau_L;
    };
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (torque_of(mid) < tau ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  const std::vector<double> speed_fracs{-0.01, -0.001, 0.0, 0.001, 0.01};
  const std::vector<double> torque_fracs{0.0, 0.375, 0.75, 1.125, 1.5};
  for (double tf : torque_fracs) {
    const double iq = iq_exact(tf * kRatedTorque);
    for (double sf : speed_fracs) {
      const double wb = sf * rated_speed_elec();
      const auto traj = permanent_trajectory(wb, CurrentDq(0.0, iq), params);
      const auto result = observability_rank(linearize(traj, params));
      RankPoint pt;
      pt.omega_bar = wb;
      pt.torque_fraction = tf;
      pt.rank = result.rank;
      for (const auto& v : result.unobservable_basis) {
        pt.kernel_off_plane =
            std::max(pt.kernel_off_plane, v.head<3>().cwiseAbs().maxCoeff());
      }
      report.ranks.push_back(pt);
    }
  }

  std::string csv = "omega_bar,torque_fraction,rank,kernel_off_plane\n";
  char buf[128];
  for (const auto& pt : report.ranks) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%d,%.9g\n", pt.omega_bar,
                  pt.torque_fraction, pt.rank, pt.kernel_off_plane);
    csv += buf;
  }
  write_text(join(opts.out_dir, "observability_sweep_ranks.csv"), csv);
  return report;
}

}  // namespace

bool is_preset(const std::string& name) {
  return name == "long_test" || name == "speed_reversal" ||
         name == "averaging_sweep" || name == "observability_sweep";
}

RunReport run_preset(const std::string& name, const PresetOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  if (name == "long_test") {
    report = run_estimation_preset(
        name, apply_options(long_test_scenario(), opts), opts);
  } else if (name == "speed_reversal") {
    report = run_estimation_preset(
        name, apply_options(speed_reversal_scenario(), opts), opts);
  } else if (name == "averaging_sweep") {
    report = run_averaging_sweep(opts);
  } else if (name == "observability_sweep") {
    report = run_observability_sweep(opts);
  } else {
    throw ValidationError("unknown preset: " + name);
  }
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  write_text(join(opts.out_dir, report.scenario + "_report.json"),
             report_to_json(report).dump(2) + "\n");
  return report;
}

RunReport run_config_file(const std::string& path, const PresetOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  LoadedConfig lc = load_config(path);
  ScenarioConfig cfg = apply_options(lc.scenario, opts);
  if (lc.equilibrium_start) {
    const double wc0 = cfg.profiles.omega_c(0.0);
    const Vec2 u_slow0 =
        cfg.profiles.u_rd(0.0) + wc0 * Vec2(0.0, cfg.params.mag.lambda_m);
    cfg.initial =
        vf_equilibrium(wc0, u_slow0, cfg.profiles.tau_load(0.0), cfg.params);
  }

  RunReport report;
  report.scenario = std::filesystem::path(path).stem().string();
  std::filesystem::create_directories(opts.out_dir);

  const VfController ctrl(cfg.profiles, cfg.params.mag);
  Trajectory traj = run_closed_loop(cfg, ctrl);
  EstimatorConfig est = lc.estimator;
  if (opts.no_saturation_estimator) est.mag = est.mag.unsaturated();
  if (cfg.inj.u_tilde.norm() > 0.0) {
    estimate_trajectory(traj, cfg.inj, est);
    report.max_err_deg_sat = max_abs_error_deg(traj);
    report.mean_err_deg_sat = mean_abs_error_deg(traj);
  }
  emit_csv(traj, join(opts.out_dir, report.scenario + ".csv"));
  write_column_manifest(
      join(opts.out_dir, report.scenario + "_columns.json"));
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  write_text(join(opts.out_dir, report.scenario + "_report.json"),
             report_to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace pmsm
