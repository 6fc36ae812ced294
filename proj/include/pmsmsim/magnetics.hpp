#pragma once

#include <Eigen/Dense>

namespace pmsm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Flux linkage produced by the stator currents, d-q components (Wb).
/// The magnet contribution (lambda_m, 0) is kept separate throughout.
using FluxDq = Vec2;

/// Stator current, d-q components (A).
using CurrentDq = Vec2;

/// Static magnetic model of a saturated PMSM.
///
/// The stored magnetic energy, as a function of the current-produced flux
/// linkage (phi_d, phi_q), is
///
///   H = phi_d^2/(2 Ld) + phi_q^2/(2 Lq)
///     + alpha30 phi_d^3 + alpha12 phi_d phi_q^2
///     + alpha40 phi_d^4 + alpha22 phi_d^2 phi_q^2 + alpha04 phi_q^4
///
/// and the currents are its gradient, i_dq = dH/dphi. The five alpha
/// coefficients capture saturation including cross-saturation; the cubic
/// ones are in A/Wb^2, the quartic ones in A/Wb^3. Mirror symmetry about
/// the d axis (H even in phi_q) holds by construction.
struct MagModel {
  double Ld = 0.0;        // d-axis inductance (H)
  double Lq = 0.0;        // q-axis inductance (H)
  double lambda_m = 0.0;  // magnet flux linkage (Wb)
  double alpha30 = 0.0;
  double alpha12 = 0.0;
  double alpha40 = 0.0;
  double alpha22 = 0.0;
  double alpha04 = 0.0;

  /// Same inductances and magnet, all saturation coefficients zeroed.
  MagModel unsaturated() const {
    MagModel m = *this;
    m.alpha30 = m.alpha12 = m.alpha40 = m.alpha22 = m.alpha04 = 0.0;
    return m;
  }

  /// All five saturation coefficients multiplied by s.
  MagModel scaled_saturation(double s) const {
    MagModel m = *this;
    m.alpha30 *= s;
    m.alpha12 *= s;
    m.alpha40 *= s;
    m.alpha22 *= s;
    m.alpha04 *= s;
    return m;
  }

  /// Magnet flux linkage vector (lambda_m, 0) in the d-q frame.
  Vec2 magnet_flux() const { return Vec2(lambda_m, 0.0); }
};

/// Plane rotation by mu: [[cos mu, -sin mu], [sin mu, cos mu]].
Mat2 rotation(double mu);

/// 90-degree rotation [[0, -1], [1, 0]]; the generator of rotation(mu),
/// i.e. d rotation/d mu = skew90() * rotation(mu).
inline Mat2 skew90() {
  Mat2 k;
  k << 0.0, -1.0, 1.0, 0.0;
  return k;
}

/// Stored magnetic energy H(phi) in A*Wb. H(0) = 0.
double energy(const FluxDq& phi, const MagModel& m);

/// Magnetization curves: i_dq = dH/dphi, evaluated analytically.
CurrentDq current_from_flux(const FluxDq& phi, const MagModel& m);

/// Explicit inverse of the magnetization curves, first order in the
/// saturation coefficients. Error is O(alpha^2).
FluxDq flux_from_current_first_order(const CurrentDq& i, const MagModel& m);

/// Exact inverse of the magnetization curves by damped Newton iteration,
/// seeded at the first-order inverse. The result phi satisfies
/// |current_from_flux(phi) - i| <= 1e-9 * max(1, |i|).
///
/// Throws NonConvergent after 50 steps, SingularJacobian if the Hessian
/// becomes too ill-conditioned along the way.
FluxDq flux_from_current_exact(const CurrentDq& i, const MagModel& m);

/// Same, seeded at a caller-supplied flux (used to warm-start sweeps).
FluxDq flux_from_current_exact(const CurrentDq& i, const MagModel& m,
                               const FluxDq& seed);

/// Second derivative matrix of H. Symmetric by construction; equals the
/// differential of the magnetization map at phi.
Mat2 hessian(const FluxDq& phi, const MagModel& m);

/// Differential of the magnetization map expressed as a function of the
/// current, first order in the saturation coefficients (the explicit
/// G_dd, G_dq, G_qq polynomials).
Mat2 g_matrix_of_current(const CurrentDq& i, const MagModel& m);

/// Current-dependent inductance matrix: inverse of g_matrix_of_current.
/// Throws SingularJacobian when |det G| < 1e-12 * |G|_F^2.
Mat2 inductance_matrix(const CurrentDq& i, const MagModel& m);

/// Saliency matrix S(mu, i_bar): the differential of the magnetization
/// map at the operating point M_mu^T i_bar, conjugated back by M_mu.
/// Uses the exact flux inverse. Symmetric positive definite on the
/// admissible domain.
Mat2 saliency_matrix(double mu, const CurrentDq& i_bar, const MagModel& m);

}  // namespace pmsm
