#include "pmsmsim/observability.hpp"

#include <cmath>

#include "pmsmsim/errors.hpp"

namespace pmsm {

PermanentTrajectory permanent_trajectory(double omega_bar,
                                         const CurrentDq& i_bar,
                                         const MotorParams& p) {
  const Mat2 k = skew90();
  PermanentTrajectory traj;
  traj.omega = omega_bar;
  traj.phi_dq = flux_from_current_exact(i_bar, p.mag);
  // Store the current the flux actually produces so the algebraic
  // equations hold to roundoff, not just to the inversion tolerance.
  traj.i_dq = current_from_flux(traj.phi_dq, p.mag);
  const Vec2 phi_tot = traj.phi_dq + p.mag.magnet_flux();
  traj.u_dq = p.R * traj.i_dq + omega_bar * (k * phi_tot);
  traj.tau_L = p.n * 1.5 * traj.i_dq.dot(k * phi_tot);
  return traj;
}

Vec2 phi_vector(const FluxDq& phi_bar, const MagModel& m) {
  const Mat2 k = skew90();
  const Mat2 h = hessian(phi_bar, m);
  const double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
  if (std::abs(det) < 1e-12 * h.squaredNorm()) {
    throw SingularJacobian("phi_vector: Hessian is numerically singular");
  }
  Mat2 h_inv;
  h_inv << h(1, 1) / det, -h(0, 1) / det, -h(1, 0) / det, h(0, 0) / det;
  return m.magnet_flux() + phi_bar +
         k * (h_inv * (k * current_from_flux(phi_bar, m)));
}

LinearizedSystem linearize(const PermanentTrajectory& traj,
                           const MotorParams& p) {
  const Mat2 k = skew90();
  const Vec2 phi_tot = traj.phi_dq + p.mag.magnet_flux();
  const double mech = 1.5 * p.n * p.n / p.J;

  LinearizedSystem sys;
  // Flux rows: -omega K dphi - K phi_tot domega + omega phi_tot dtheta.
  sys.A.block<2, 2>(0, 0) = -traj.omega * k;
  sys.A.block<2, 1>(0, 2) = -(k * phi_tot);
  sys.A.block<2, 1>(0, 3) = traj.omega * phi_tot;
  // Speed row.
  sys.A.block<1, 2>(2, 0) = mech * (k.transpose() * traj.i_dq).transpose();
  sys.A(2, 3) = -mech * traj.i_dq.dot(phi_tot);
  sys.A(2, 4) = -static_cast<double>(p.n) / p.J;
  // Angle row; the load-torque row stays zero.
  sys.A(3, 2) = 1.0;

  sys.B.block<2, 2>(0, 0) = Mat2::Identity();

  sys.C.block<2, 2>(0, 0) = hessian(traj.phi_dq, p.mag);
  return sys;
}

ObservabilityResult observability_rank(const LinearizedSystem& sys) {
  Eigen::Matrix<double, 10, 5> obs;
  Eigen::Matrix<double, 2, 5> block = sys.C;
  for (int i = 0; i < 5; ++i) {
    obs.block<2, 5>(2 * i, 0) = block;
    block = block * sys.A;
  }

  // Balance: column scaling tames the unit disparity between the state
  // components, row scaling the growth of C A^k.
  Eigen::Matrix<double, 5, 1> col_scale;
  for (int j = 0; j < 5; ++j) {
    const double norm = obs.col(j).norm();
    col_scale(j) = norm > 0.0 ? 1.0 / norm : 1.0;
    obs.col(j) *= col_scale(j);
  }
  for (int i = 0; i < 10; ++i) {
    const double norm = obs.row(i).norm();
    if (norm > 0.0) obs.row(i) /= norm;
  }

  Eigen::JacobiSVD<Eigen::Matrix<double, 10, 5>> svd(
      obs, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const Eigen::VectorXd sigma = svd.singularValues();

  ObservabilityResult res;
  res.singular_values = sigma;
  const double thresh = 1e-9 * sigma(0);
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > thresh) ++res.rank;
  }
  for (int i = res.rank; i < 5; ++i) {
    Eigen::Matrix<double, 5, 1> v = svd.matrixV().col(i);
    v = col_scale.asDiagonal() * v;  // undo the column scaling
    v.normalize();
    res.unobservable_basis.push_back(v);
  }
  return res;
}

}  // namespace pmsm
