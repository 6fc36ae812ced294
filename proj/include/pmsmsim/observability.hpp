#pragma once

#include <vector>

#include "pmsmsim/dynamics.hpp"

namespace pmsm {

/// Operating condition with constant d-q fluxes, currents, speed and
/// load torque (an equilibrium of everything except the angle).
struct PermanentTrajectory {
  double omega = 0.0;     // electrical speed (rad/s)
  CurrentDq i_dq{0.0, 0.0};
  FluxDq phi_dq{0.0, 0.0};
  Vec2 u_dq{0.0, 0.0};
  double tau_L = 0.0;
};

/// Linearization of the d-q dynamics augmented with d(tau_L)/dt = 0
/// around a permanent trajectory, over the state
/// (dphi_d, dphi_q, domega, dtheta, dtau_L).
///
/// A and C follow the convention of the observability analysis: the
/// physical voltages and currents of the reference trajectory are held
/// frozen and rotated into the perturbed frame (terms proportional to
/// the measured current perturbation are output injection and cannot
/// affect observability), and the output is the d-q current sensitivity
/// with the constant frame rotation dropped.
struct LinearizedSystem {
  Eigen::Matrix<double, 5, 5> A = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 2> B = Eigen::Matrix<double, 5, 2>::Zero();
  Eigen::Matrix<double, 2, 5> C = Eigen::Matrix<double, 2, 5>::Zero();
};

struct ObservabilityResult {
  int rank = 0;
  std::vector<Eigen::Matrix<double, 5, 1>> unobservable_basis;
  Eigen::VectorXd singular_values;
};

/// Builds the permanent trajectory through (omega_bar, i_bar): the flux
/// from the exact magnetization inverse, the voltage from the flux
/// balance, and the load torque from the torque balance.
PermanentTrajectory permanent_trajectory(double omega_bar,
                                         const CurrentDq& i_bar,
                                         const MotorParams& p);

/// Phi(phi_bar) = phi_m + phi_bar + K [D I]^{-1} K I(phi_bar); nonzero in
/// any reasonable situation, it carries the angle information of the
/// linearized flux dynamics.
Vec2 phi_vector(const FluxDq& phi_bar, const MagModel& m);

/// Analytic A, B, C at the given permanent trajectory.
LinearizedSystem linearize(const PermanentTrajectory& traj,
                           const MotorParams& p);

/// Rank of the stacked observability matrix [C; CA; ...; CA^4] by SVD
/// with threshold sigma_i > 1e-9 sigma_1, after row/column balancing.
/// Returns the kernel (unobservable directions) in natural state
/// coordinates.
ObservabilityResult observability_rank(const LinearizedSystem& sys);

}  // namespace pmsm
