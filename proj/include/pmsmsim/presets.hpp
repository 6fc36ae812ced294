#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmsmsim/config.hpp"
#include "pmsmsim/observability.hpp"
#include "pmsmsim/simulate.hpp"

namespace pmsm {

/// Reference motor: the 1.5 kW surface-mounted PMSM the bundled
/// scenarios are built around (saturation coefficients de-normalized
/// from the datasheet products).
MotorParams table1_params();

/// Probing voltage used by the bundled scenarios: 15 V square wave on
/// the gamma axis at 2*pi*500 rad/s.
InjectionSpec table1_injection();

double rated_current();     // A, peak
double rated_torque();      // N m
double rated_speed_elec();  // electrical rad/s

/// Desk-scale long test (4 s): speed sweeping within +/-2% of rated
/// including a reversal, load torque stepping 0 -> 150% -> 0 of rated,
/// resistive-drop compensation tracking the commanded torque.
ScenarioConfig long_test_scenario();

/// Desk-scale very slow speed reversal (4 s): -0.2% -> +0.2% of rated
/// speed at 150% rated torque.
ScenarioConfig speed_reversal_scenario();

struct RankPoint {
  double omega_bar = 0.0;        // electrical rad/s
  double torque_fraction = 0.0;  // of rated
  int rank = 0;
  double kernel_off_plane = 0.0;  // largest |dphi|,|domega| kernel component
};

struct PresetOptions {
  std::uint64_t seed = 0;
  std::optional<double> omega_inj_hz;  // overrides the injection frequency
  bool no_saturation_estimator = false;
  std::string out_dir = ".";
};

struct RunReport {
  std::string scenario;
  double runtime_s = 0.0;
  // Position-error summaries over post-warm-up samples (deg electrical).
  std::optional<double> max_err_deg_sat, mean_err_deg_sat;
  std::optional<double> max_err_deg_unsat, mean_err_deg_unsat;
  std::vector<AveragingRow> averaging;  // averaging_sweep only
  std::vector<RankPoint> ranks;         // observability_sweep only
};

bool is_preset(const std::string& name);

/// Runs one of the bundled experiments ("long_test", "speed_reversal",
/// "averaging_sweep", "observability_sweep"), writing per-sample CSV
/// files, a column manifest and a JSON report into opts.out_dir.
RunReport run_preset(const std::string& name, const PresetOptions& opts);

/// Runs a scenario loaded from a config file through the same pipeline
/// (simulation, estimation with the configured estimator model, CSV and
/// report emission).
RunReport run_config_file(const std::string& path, const PresetOptions& opts);

/// Mean/max |err_deg| helpers over the valid estimation samples.
double max_abs_error_deg(const Trajectory& traj);
double mean_abs_error_deg(const Trajectory& traj);

}  // namespace pmsm
