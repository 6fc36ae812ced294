#include <doctest.h>

#include <cmath>
#include <random>

#include "pmsmsim/dynamics.hpp"
#include "pmsmsim/observability.hpp"
#include "pmsmsim/presets.hpp"

using namespace pmsm;

namespace {

const MotorParams kParams = table1_params();

// The linearization convention holds the reference trajectory's physical
// voltages and currents frozen and rotates them into the perturbed
// frame; its Jacobian is the analytic A. Evaluated at theta_bar = 0.
Eigen::Matrix<double, 5, 1> frozen_field(const Eigen::Matrix<double, 5, 1>& x,
                                         const PermanentTrajectory& traj,
                                         const MotorParams& p) {
  const Mat2 k = skew90();
  const FluxDq phi(x(0), x(1));
  const double omega = x(2);
  const double theta = x(3);
  const double tau = x(4);
  const Mat2 rot_t = rotation(theta).transpose();
  const Vec2 u_frozen = rot_t * traj.u_dq;   // M_theta^T u_alphabeta
  const Vec2 i_frozen = rot_t * traj.i_dq;   // M_theta^T i_alphabeta
  const Vec2 phi_tot = phi + p.mag.magnet_flux();
  Eigen::Matrix<double, 5, 1> dx;
  dx.segment<2>(0) = u_frozen - p.R * i_frozen - omega * (k * phi_tot);
  dx(2) = (static_cast<double>(p.n) * p.n / p.J) *
          (1.5 * i_frozen.dot(k * phi_tot) - tau / p.n);
  dx(3) = omega;
  dx(4) = 0.0;
  return dx;
}

}  // namespace

TEST_CASE("permanent trajectory: zero point, algebraic consistency, torque") {
  const auto zero = permanent_trajectory(0.0, CurrentDq(0.0, 0.0), kParams);
  CHECK(zero.phi_dq.norm() == 0.0);
  CHECK(zero.u_dq.norm() == 0.0);
  CHECK(zero.tau_L == 0.0);

  // Re-substitution into the state equations kills the derivatives.
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double wb = 500.0 * u(rng);
    const CurrentDq ib(5.0 * u(rng), 5.0 * u(rng));
    const auto traj = permanent_trajectory(wb, ib, kParams);
    MotorStateDq s;
    s.phi = traj.phi_dq;
    s.omega = traj.omega;
    const DqRates r = dq_derivatives(s, traj.u_dq, traj.tau_L, kParams);
    CHECK(r.dphi.norm() < 1e-10);
    CHECK(std::abs(r.domega) < 1e-10);
  }

  // Unsaturated, pure q current: tau = 1.5 n lambda i_q.
  MotorParams lin = kParams;
  lin.mag = lin.mag.unsaturated();
  const double iq = 3.3;
  const auto traj = permanent_trajectory(100.0, CurrentDq(0.0, iq), lin);
  CHECK(traj.tau_L ==
        doctest::Approx(1.5 * lin.n * lin.mag.lambda_m * iq).epsilon(1e-12));
}

TEST_CASE("phi vector: unloaded value, nonvanishing, independence from K phi") {
  MagModel lin = kParams.mag.unsaturated();
  const Vec2 phi0 = phi_vector(FluxDq(0.0, 0.0), lin);
  CHECK(phi0(0) == doctest::Approx(lin.lambda_m).epsilon(1e-14));
  CHECK(phi0(1) == doctest::Approx(0.0).epsilon(1e-14));

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const CurrentDq i(1.5 * rated_current() * u(rng),
                      1.5 * rated_current() * u(rng));
    const FluxDq phi = flux_from_current_exact(i, kParams.mag);
    const Vec2 v = phi_vector(phi, kParams.mag);
    CHECK(v.norm() > 1e-3);
    // det [Phi, K Phi] equals |Phi|^2, so the pair spans the plane.
    const Vec2 kv = skew90() * v;
    const double det = v(0) * kv(1) - v(1) * kv(0);
    CHECK(det == doctest::Approx(v.squaredNorm()).epsilon(1e-12));
    CHECK(det > 0.0);
  }
}

TEST_CASE("linearize: structure and finite-difference agreement") {
  const auto traj =
      permanent_trajectory(0.01 * rated_speed_elec(), CurrentDq(1.0, 4.0),
                           kParams);
  const LinearizedSystem sys = linearize(traj, kParams);

  // Load-torque row is exactly zero.
  CHECK(sys.A.row(4).cwiseAbs().maxCoeff() == 0.0);

  // Central finite differences of the frozen-signal field.
  Eigen::Matrix<double, 5, 1> x0;
  x0 << traj.phi_dq(0), traj.phi_dq(1), traj.omega, 0.0, traj.tau_L;
  Eigen::Matrix<double, 5, 5> fd;
  for (int j = 0; j < 5; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0(j)));
    auto xp = x0, xm = x0;
    xp(j) += h;
    xm(j) -= h;
    fd.col(j) = (frozen_field(xp, traj, kParams) -
                 frozen_field(xm, traj, kParams)) /
                (2.0 * h);
  }
  const double scale = fd.cwiseAbs().maxCoeff();
  CHECK((sys.A - fd).cwiseAbs().maxCoeff() < 1e-6 * scale);

  // At standstill the flux rows lose their dtheta column.
  const auto still = permanent_trajectory(0.0, CurrentDq(1.0, 4.0), kParams);
  const LinearizedSystem sys0 = linearize(still, kParams);
  CHECK(sys0.A.block<2, 1>(0, 3).cwiseAbs().maxCoeff() == 0.0);

  // B passes the voltage straight into the flux rows.
  CHECK(sys.B.block<2, 2>(0, 0) == Mat2::Identity());
  CHECK(sys.B.block<3, 2>(2, 0).cwiseAbs().maxCoeff() == 0.0);

  // C is the current sensitivity to the flux.
  CHECK(sys.C.block<2, 2>(0, 0) ==
        hessian(traj.phi_dq, kParams.mag));
}

TEST_CASE("observability rank: full at speed, deficient at standstill") {
  const CurrentDq i_bar(0.0, 3.0);
  const auto moving =
      permanent_trajectory(0.01 * rated_speed_elec(), i_bar, kParams);
  const auto r_moving = observability_rank(linearize(moving, kParams));
  CHECK(r_moving.rank == 5);
  CHECK(r_moving.unobservable_basis.empty());

  const auto still = permanent_trajectory(0.0, i_bar, kParams);
  const auto r_still = observability_rank(linearize(still, kParams));
  CHECK(r_still.rank == 4);
  REQUIRE(r_still.unobservable_basis.size() == 1);
  const auto& v = r_still.unobservable_basis.front();
  // The lost direction mixes dtheta and dtau_L and nothing else.
  CHECK(std::abs(v(3)) > 1e-3);
  CHECK(std::abs(v(4)) > 1e-6);
  CHECK(v.head<3>().cwiseAbs().maxCoeff() < 1e-9);

  LinearizedSystem zero_c = linearize(moving, kParams);
  zero_c.C.setZero();
  CHECK(observability_rank(zero_c).rank == 0);
}

TEST_CASE("rank transition across a speed/torque grid") {
  for (double iq : {0.0, 4.0, 7.8}) {
    for (double frac : {-0.01, -1e-3, 1e-3, 0.01}) {
      const auto traj = permanent_trajectory(frac * rated_speed_elec(),
                                             CurrentDq(0.0, iq), kParams);
      CHECK(observability_rank(linearize(traj, kParams)).rank == 5);
    }
    const auto still =
        permanent_trajectory(0.0, CurrentDq(0.0, iq), kParams);
    const auto res = observability_rank(linearize(still, kParams));
    CHECK(res.rank == 4);
    for (const auto& v : res.unobservable_basis) {
      CHECK(v.head<3>().cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}
