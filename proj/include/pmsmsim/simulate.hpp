#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmsmsim/dynamics.hpp"

namespace pmsm {

/// One closed-loop scenario: motor, drive profiles, injection, horizon,
/// step size, initial state and the measurement-noise level.
struct ScenarioConfig {
  MotorParams params;
  DriveProfiles profiles;
  InjectionSpec inj;
  double t_end = 0.0;
  double dt = 0.0;
  MotorStateGd initial;
  double current_noise_std = 0.0;  // additive on recorded currents only (A)
  std::uint64_t seed = 0;

  /// Throws ValidationError on a violated invariant.
  void validate() const;
};

/// Uniformly sampled closed-loop run. All series share the same length;
/// the estimation columns are NaN until estimate_trajectory fills them.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> phi_gamma, phi_delta;
  std::vector<double> omega, theta, theta_c;
  std::vector<double> i_gamma, i_delta;  // recorded (possibly noisy) currents
  std::vector<double> u_gamma, u_delta;
  std::vector<double> i_bar_gamma, i_bar_delta;
  std::vector<double> i_tilde_gamma, i_tilde_delta;
  std::vector<double> theta_hat, err_deg;
  std::vector<std::uint8_t> est_valid;
  bool has_estimates = false;

  std::size_t size() const { return t.size(); }
};

/// Classical fixed-step 4th-order Runge-Kutta step. Throws NonFinite if
/// any component of the result is not finite.
Eigen::VectorXd rk4_step(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& f,
    const Eigen::VectorXd& x, double t, double dt);

/// Integrates the gamma-delta closed loop under the given control law
/// with the high-frequency injection superimposed, recording every
/// sample. The configured initial state is the slowly-varying component;
/// the integration starts with the flux offset by the instantaneous
/// ripple (u~/omega_inj) F(0). Square-wave injection is held constant
/// over each step (its switching instants coincide with step boundaries
/// when dt divides the injection period, so the held value integrates
/// the exact piecewise dynamics).
Trajectory run_closed_loop(const ScenarioConfig& cfg,
                           const SensorlessController& ctrl);

/// Identical loop with the injection amplitude forced to zero: the
/// slowly-varying companion system.
Trajectory run_averaged(const ScenarioConfig& cfg,
                        const SensorlessController& ctrl);

/// Error norms between the full and the averaged system for one
/// injection pulsation.
struct AveragingRow {
  double omega_inj;
  double e_mech;      // sup|theta| gap + sup|omega| gap * 1 s
  double e_flux;      // sup flux gap after subtracting (u~/Omega) F(Omega t)
  double e_flux_raw;  // sup flux gap, ripple not subtracted
};

/// Runs the full and the averaged system for each pulsation from the
/// same slowly-varying initial state and reports the error norms over
/// the final 80% of the horizon (the initial transient is discarded).
std::vector<AveragingRow> verify_averaging(const ScenarioConfig& cfg,
                                           const SensorlessController& ctrl,
                                           const std::vector<double>& omegas);

/// Steady state of the V/f-driven motor at constant frame speed, slow
/// voltage and load torque: solves for (phi_gd, theta - theta_c) such
/// that the flux and speed derivatives vanish with omega = omega_c.
/// Used to start scenarios on their operating point.
MotorStateGd vf_equilibrium(double omega_c, const Vec2& u_slow, double tau_L,
                            const MotorParams& p);

}  // namespace pmsm
