#include <doctest.h>

#include <cmath>
#include <random>

#include "pmsmsim/dynamics.hpp"
#include "pmsmsim/errors.hpp"
#include "pmsmsim/observability.hpp"
#include "pmsmsim/presets.hpp"
#include "pmsmsim/simulate.hpp"

using namespace pmsm;

namespace {

const MotorParams kParams = table1_params();

double quadrature_mean(Waveform w, bool primitive) {
  const int n = 1 << 16;
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double sigma = 2.0 * M_PI * j / n;
    acc += primitive ? f_primitive(sigma, w) : f_eval(sigma, w);
  }
  return acc / n;
}

}  // namespace

TEST_CASE("carrier waveform values and zero mean") {
  CHECK(f_eval(M_PI / 2.0, Waveform::SquareWave) == 1.0);
  CHECK(f_eval(3.0 * M_PI / 2.0, Waveform::SquareWave) == -1.0);
  CHECK(f_eval(0.0, Waveform::Sinusoid) == 1.0);
  CHECK(std::abs(quadrature_mean(Waveform::SquareWave, false)) < 1e-12);
  CHECK(std::abs(quadrature_mean(Waveform::Sinusoid, false)) < 1e-12);
}

TEST_CASE("carrier primitive: peak, zero mean, derivative, continuity") {
  CHECK(f_primitive(M_PI, Waveform::SquareWave) ==
        doctest::Approx(M_PI / 2.0).epsilon(1e-15));
  CHECK(std::abs(quadrature_mean(Waveform::SquareWave, true)) < 1e-12);
  CHECK(std::abs(quadrature_mean(Waveform::Sinusoid, true)) < 1e-12);

  // dF/dsigma = f away from the corners.
  for (double sigma : {0.4, 1.7, 2.9, 3.6, 5.1, 6.0}) {
    for (Waveform w : {Waveform::SquareWave, Waveform::Sinusoid}) {
      const double h = 1e-6;
      const double fd =
          (f_primitive(sigma + h, w) - f_primitive(sigma - h, w)) / (2.0 * h);
      CHECK(fd == doctest::Approx(f_eval(sigma, w)).epsilon(1e-6));
    }
  }

  // Continuous across the corner at pi.
  CHECK(f_primitive(M_PI - 1e-9, Waveform::SquareWave) ==
        doctest::Approx(f_primitive(M_PI + 1e-9, Waveform::SquareWave))
            .epsilon(1e-6));

  // Mean square of F over one period: pi^2/12 for the square wave.
  const int n = 1 << 20;
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double v = f_primitive(2.0 * M_PI * j / n, Waveform::SquareWave);
    acc += v * v;
  }
  acc /= n;
  CHECK(acc == doctest::Approx(M_PI * M_PI / 12.0).epsilon(1e-10));
  CHECK(f_primitive_mean_square(Waveform::SquareWave) == M_PI * M_PI / 12.0);
}

TEST_CASE("dq derivatives: zero state, equilibrium, sign symmetry") {
  MotorStateDq zero;
  const DqRates r0 = dq_derivatives(zero, Vec2::Zero(), 0.0, kParams);
  CHECK(r0.dphi.norm() == 0.0);
  CHECK(r0.domega == 0.0);
  CHECK(r0.dtheta == 0.0);

  // A permanent trajectory solves the algebraic equations: plugging it
  // back must zero the flux and speed derivatives.
  const auto traj =
      permanent_trajectory(0.3 * rated_speed_elec(), CurrentDq(1.0, 4.0),
                           kParams);
  MotorStateDq s;
  s.phi = traj.phi_dq;
  s.omega = traj.omega;
  const DqRates re = dq_derivatives(s, traj.u_dq, traj.tau_L, kParams);
  CHECK(re.dphi.norm() < 1e-10);
  CHECK(std::abs(re.domega) < 1e-10);

  // (u_q, phi_q, omega, theta, tau) -> negated leaves the equations
  // unchanged.
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    MotorStateDq a;
    a.phi = FluxDq(0.2 * u(rng), 0.2 * u(rng));
    a.omega = 300.0 * u(rng);
    a.theta = 3.0 * u(rng);
    const Vec2 volts(20.0 * u(rng), 20.0 * u(rng));
    const double tau = 5.0 * u(rng);
    const DqRates fwd = dq_derivatives(a, volts, tau, kParams);

    MotorStateDq b;
    b.phi = FluxDq(a.phi(0), -a.phi(1));
    b.omega = -a.omega;
    b.theta = -a.theta;
    const DqRates mir =
        dq_derivatives(b, Vec2(volts(0), -volts(1)), -tau, kParams);
    CHECK(mir.dphi(0) == doctest::Approx(fwd.dphi(0)).epsilon(1e-12));
    CHECK(mir.dphi(1) == doctest::Approx(-fwd.dphi(1)).epsilon(1e-12));
    CHECK(mir.domega == doctest::Approx(-fwd.domega).epsilon(1e-12));
    CHECK(mir.dtheta == doctest::Approx(-fwd.dtheta).epsilon(1e-12));
  }
}

TEST_CASE("gamma-delta derivatives coincide with dq when frames align") {
  MotorStateGd zero;
  const GdRates r0 = gd_derivatives(zero, Vec2::Zero(), 0.0, 0.0, kParams);
  CHECK(r0.dphi_gd.norm() == 0.0);
  CHECK(r0.domega == 0.0);

  MotorStateGd s;
  s.phi_gd = Vec2(0.03, -0.05);
  s.omega = 120.0;
  s.theta = 0.8;
  s.theta_c = 0.8;  // frames coincide
  const Vec2 volts(4.0, 11.0);
  const GdRates g = gd_derivatives(s, volts, s.omega, 2.0, kParams);

  MotorStateDq d;
  d.phi = s.phi_gd;
  d.omega = s.omega;
  d.theta = s.theta;
  const DqRates q = dq_derivatives(d, volts, 2.0, kParams);
  CHECK(g.dphi_gd(0) == doctest::Approx(q.dphi(0)).epsilon(1e-14));
  CHECK(g.dphi_gd(1) == doctest::Approx(q.dphi(1)).epsilon(1e-14));
  CHECK(g.domega == doctest::Approx(q.domega).epsilon(1e-14));
}

TEST_CASE("frame consistency: dq and gamma-delta produce the same alpha-beta currents") {
  // One physical voltage program, integrated in both formulations.
  const double omega_c = 60.0;
  const auto u_gd_of_t = [](double t) {
    return Vec2(0.5 * std::sin(2.0 * M_PI * 30.0 * t),
                60.0 * 0.155 + 0.3 * std::cos(2.0 * M_PI * 11.0 * t));
  };
  const double tau = 1.0;

  // gamma-delta state [phi_g, phi_d, omega, theta, theta_c].
  const auto gd_rhs = [&](const Eigen::VectorXd& x, double t) {
    MotorStateGd s;
    s.phi_gd = Vec2(x(0), x(1));
    s.omega = x(2);
    s.theta = x(3);
    s.theta_c = x(4);
    const GdRates r = gd_derivatives(s, u_gd_of_t(t), omega_c, tau, kParams);
    Eigen::VectorXd dx(5);
    dx << r.dphi_gd(0), r.dphi_gd(1), r.domega, r.dtheta, r.dtheta_c;
    return dx;
  };
  // dq state [phi_d, phi_q, omega, theta]; u_dq = M(theta_c - theta) u_gd.
  const auto dq_rhs = [&](const Eigen::VectorXd& x, double t) {
    MotorStateDq s;
    s.phi = FluxDq(x(0), x(1));
    s.omega = x(2);
    s.theta = x(3);
    const double theta_c = omega_c * t + 0.0;
    const Vec2 u_dq = rotation(theta_c - s.theta) * u_gd_of_t(t);
    const DqRates r = dq_derivatives(s, u_dq, tau, kParams);
    Eigen::VectorXd dx(4);
    dx << r.dphi(0), r.dphi(1), r.domega, r.dtheta;
    return dx;
  };

  const double theta0 = 0.25;
  const FluxDq phi_dq0(0.01, 0.02);
  Eigen::VectorXd xg(5), xd(4);
  const Vec2 phi_gd0 = rotation(theta0 - 0.0) * phi_dq0;
  xg << phi_gd0(0), phi_gd0(1), 40.0, theta0, 0.0;
  xd << phi_dq0(0), phi_dq0(1), 40.0, theta0;

  const double dt = 1e-5;
  double worst = 0.0;
  for (int k = 0; k * dt < 0.1; ++k) {
    const double t = k * dt;
    const Vec2 i_ab_gd =
        rotation(omega_c * t) *
        (rotation(xg(3) - xg(4)) *
         current_from_flux(rotation(xg(3) - xg(4)).transpose() *
                               Vec2(xg(0), xg(1)),
                           kParams.mag));
    const Vec2 i_ab_dq =
        rotation(xd(3)) *
        current_from_flux(FluxDq(xd(0), xd(1)), kParams.mag);
    worst = std::max(worst, (i_ab_gd - i_ab_dq).norm());
    xg = rk4_step(gd_rhs, xg, t, dt);
    xd = rk4_step(dq_rhs, xd, t, dt);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("vf_control assembles feed-forward and injection") {
  DriveProfiles zero_profiles;
  InjectionSpec no_inj;
  const auto [w0, u0] = vf_control(0.0, zero_profiles, no_inj, kParams.mag);
  CHECK(w0 == 0.0);
  CHECK(u0.norm() == 0.0);

  DriveProfiles p;
  p.omega_c = PiecewiseLinear::constant(100.0);
  InjectionSpec inj = table1_injection();
  const double t_plus = inj.period() / 4.0;   // f = +1
  const double t_minus = 3.0 * inj.period() / 4.0;  // f = -1
  const auto [wc, u_plus] = vf_control(t_plus, p, inj, kParams.mag);
  CHECK(wc == 100.0);
  CHECK(u_plus(0) == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(u_plus(1) == doctest::Approx(15.5).epsilon(1e-12));
  const auto [wc2, u_minus] = vf_control(t_minus, p, inj, kParams.mag);
  CHECK(u_minus(0) == doctest::Approx(-15.0).epsilon(1e-12));
}

TEST_CASE("controller interface: V/f ignores currents, stub returns constants") {
  DriveProfiles p;
  p.omega_c = PiecewiseLinear::constant(50.0);
  p.u_rd_delta = PiecewiseLinear::constant(2.0);
  const VfController vf(p, kParams.mag);

  const auto a = vf.step(Vec2(0.0, 0.0), 0.3, Eigen::VectorXd(), 1.0);
  const auto b = vf.step(Vec2(37.0, -12.0), 0.3, Eigen::VectorXd(), 1.0);
  CHECK(a.omega_c == b.omega_c);
  CHECK(a.u_gd == b.u_gd);
  CHECK(vf.eta_dim() == 0);
  CHECK(a.eta_dot.size() == 0);

  const ConstantController stub(7.0, Vec2(1.0, -2.0));
  const auto c = stub.step(Vec2(5.0, 5.0), 9.9, Eigen::VectorXd(), 123.0);
  CHECK(c.omega_c == 7.0);
  CHECK(c.u_gd == Vec2(1.0, -2.0));
}

TEST_CASE("free response dissipates: energy monotone, state decays") {
  // u = 0, tau_L = 0, unsaturated motor. The total energy
  // 1.5 H(phi) + 0.5 (J/n^2) omega^2 must never increase, and the
  // electrical states decay to 1e-3 of their start within 15 L/R.
  MotorParams p = kParams;
  p.mag = p.mag.unsaturated();
  const double tau_e = p.mag.Lq / p.R;

  const auto rhs = [&](const Eigen::VectorXd& x, double) {
    MotorStateDq s;
    s.phi = FluxDq(x(0), x(1));
    s.omega = x(2);
    const DqRates r = dq_derivatives(s, Vec2::Zero(), 0.0, p);
    Eigen::VectorXd dx(3);
    dx << r.dphi(0), r.dphi(1), r.domega;
    return dx;
  };

  Eigen::VectorXd x(3);
  x << 0.02, 0.015, 30.0;
  const double w_scale = p.mag.lambda_m / rated_speed_elec();
  const double norm0 = Vec2(x(0), x(1)).norm() + std::abs(x(2)) * w_scale;

  const auto total_energy = [&](const Eigen::VectorXd& v) {
    return 1.5 * energy(FluxDq(v(0), v(1)), p.mag) +
           0.5 * (p.J / (p.n * p.n)) * v(2) * v(2);
  };

  const double dt = 2e-6;
  double e_prev = total_energy(x);
  double t = 0.0;
  while (t < 15.0 * tau_e) {
    x = rk4_step(rhs, x, t, dt);
    t += dt;
    const double e = total_energy(x);
    CHECK(e <= e_prev * (1.0 + 1e-12) + 1e-15);
    e_prev = e;
  }
  const double norm_end = Vec2(x(0), x(1)).norm() + std::abs(x(2)) * w_scale;
  CHECK(norm_end <= 1e-3 * norm0);
}

TEST_CASE("profiles validate and interpolate") {
  CHECK_THROWS_AS(PiecewiseLinear({0.0, 0.0}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(PiecewiseLinear({0.0}, {1.0, 2.0}), ValidationError);
  const PiecewiseLinear ramp({0.0, 1.0}, {0.0, 10.0});
  CHECK(ramp(0.5) == doctest::Approx(5.0));
  CHECK_THROWS_AS(ramp(1.5), OutOfProfileDomain);
  CHECK_THROWS_AS(ramp(-0.1), OutOfProfileDomain);
  CHECK(PiecewiseLinear::constant(3.0)(1e9) == 3.0);
}
