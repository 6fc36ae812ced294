#pragma once

#include <string>

#include "pmsmsim/simulate.hpp"

namespace pmsm {

/// Writes a trajectory as CSV: a header row, then one row per sample
/// with columns t, phi_gamma, phi_delta, omega, theta, theta_c, i_gamma,
/// i_delta, u_gamma, u_delta, i_bar_gamma, i_bar_delta, i_tilde_gamma,
/// i_tilde_delta, theta_hat, err_deg. Floats carry 9 significant digits,
/// comma separators, LF line endings. Estimation columns hold nan before
/// estimate_trajectory ran or during window warm-up.
void emit_csv(const Trajectory& traj, const std::string& path);

/// Reads back a file written by emit_csv.
Trajectory parse_csv(const std::string& path);

}  // namespace pmsm
