#pragma once

#include <Eigen/Dense>

#include "pmsmsim/dynamics.hpp"

namespace pmsm {

/// Sliding one-period demodulation window. The sample period must divide
/// the injection period: window * dt = 2*pi/omega_inj to within 1e-6
/// relative (the simulator guarantees this by construction).
struct DemodConfig {
  double omega_inj = 0.0;
  double dt = 0.0;
  int window = 0;  // samples per injection period
  Waveform waveform = Waveform::SquareWave;

  DemodConfig() = default;
  DemodConfig(double omega_inj_, double dt_, Waveform waveform_);

  double period() const { return 2.0 * M_PI / omega_inj; }
};

/// Demodulated series; columns before first_valid are window warm-up and
/// hold NaN.
struct DemodResult {
  Eigen::Matrix2Xd values;
  int first_valid = 0;
};

/// Slowly-varying component: trapezoidal mean over the trailing window
/// [t - T, t]. Samples are columns of a 2 x K matrix, sample j taken at
/// t = j * dt. Throws SeriesTooShort if K <= window.
DemodResult sliding_mean(const Eigen::Matrix2Xd& samples,
                         const DemodConfig& cfg);

/// Ripple envelope: trailing-window correlation with the carrier
/// primitive F(omega_inj s), normalized by the window quadrature of F^2
/// (whose continuum value is pi^2 T / 12 for the square wave).
DemodResult sliding_correlate(const Eigen::Matrix2Xd& samples,
                              const DemodConfig& cfg);

}  // namespace pmsm
