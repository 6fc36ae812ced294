#pragma once

#include <optional>

#include "pmsmsim/magnetics.hpp"
#include "pmsmsim/simulate.hpp"

namespace pmsm {

enum class InitialGuessPolicy { NearestPrevious, NearestZero };

/// Configuration of the position estimator. The magnetic model here is
/// the estimator's model and may deliberately differ from the plant's
/// (e.g. saturation coefficients zeroed).
struct EstimatorConfig {
  MagModel mag;
  int grid_size = 720;
  double refine_tol = 1e-5;            // rad
  double continuity_window = M_PI / 2;  // rad
  InitialGuessPolicy policy = InitialGuessPolicy::NearestPrevious;

  void validate() const;
};

/// One position estimate. mu = theta_hat - theta_c lies in (-pi, pi].
/// When the residual landscape has a second local minimum within 10% of
/// the best (the unsaturated two-solution ambiguity), `ambiguous` is set
/// and the runner-up is reported.
struct PositionEstimate {
  double theta_hat = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  double runner_up_mu = 0.0;
  double runner_up_residual = 0.0;
  bool ambiguous = false;
};

/// Squared mismatch |i_tilde - S(mu, i_bar) u_tilde / omega_inj|^2 (A^2).
double residual(double mu, const Vec2& i_tilde, const Vec2& i_bar,
                const Vec2& u_tilde, double omega_inj, const MagModel& mag);

/// Recovers the rotor angle: evaluates the residual on a uniform grid
/// over (-pi, pi], refines the best local minimum by golden section, and
/// returns theta_hat = theta_c + mu*. If the runner-up minimum is within
/// 10% of the best, the ambiguity flag is set and the candidate nearest
/// the previous estimate (or nearest zero without one) is selected.
/// Throws NoInjection when |u_tilde| = 0.
PositionEstimate estimate(const Vec2& i_tilde, const Vec2& i_bar,
                          const Vec2& u_tilde, double omega_inj,
                          double theta_c, std::optional<double> prev_theta_hat,
                          const EstimatorConfig& cfg);

/// Demodulates the recorded currents of a trajectory (two cascaded
/// one-period windows) and estimates the rotor angle per sample. Each
/// estimate is aligned with the center of its two-period span, so the
/// first and last window-length samples stay flagged invalid along with
/// the warm-up.
void estimate_trajectory(Trajectory& traj, const InjectionSpec& inj,
                         const EstimatorConfig& cfg);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace pmsm
