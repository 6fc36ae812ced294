#include "pmsmsim/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "pmsmsim/errors.hpp"

namespace pmsm {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_finite(const Eigen::VectorXd& x, double t) {
  if (!x.allFinite()) {
    throw NonFinite("state became non-finite at t = " + std::to_string(t));
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(params.mag.Ld > 0.0)) throw ValidationError("motor.L_d must be > 0");
  if (!(params.mag.Lq > 0.0)) throw ValidationError("motor.L_q must be > 0");
  if (!(params.mag.lambda_m >= 0.0)) {
    throw ValidationError("motor.lambda must be >= 0");
  }
  if (!(params.R > 0.0)) throw ValidationError("motor.R must be > 0");
  if (params.n < 1) throw ValidationError("motor.n must be >= 1");
  if (!(params.J > 0.0)) throw ValidationError("motor.J must be > 0");
  if (!(dt > 0.0)) throw ValidationError("run.dt must be > 0");
  if (!(t_end > 0.0)) throw ValidationError("run.t_end must be > 0");
  if (!(current_noise_std >= 0.0)) {
    throw ValidationError("run.noise_std must be >= 0");
  }
  if (inj.u_tilde.norm() > 0.0) {
    if (!(inj.omega_inj > 0.0)) {
      throw ValidationError("injection.omega_inj must be > 0");
    }
    const double dt_max = inj.period() / 64.0;
    if (dt > dt_max * (1.0 + 1e-9)) {
      throw ValidationError(
          "run.dt must be <= (2*pi/omega_inj)/64 while injection is active");
    }
  }
  if (!initial.phi_gd.allFinite() || !std::isfinite(initial.omega) ||
      !std::isfinite(initial.theta) || !std::isfinite(initial.theta_c)) {
    throw ValidationError("initial state must be finite");
  }
}

Eigen::VectorXd rk4_step(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& f,
    const Eigen::VectorXd& x, double t, double dt) {
  if (!(dt > 0.0)) throw ValidationError("rk4_step: dt must be > 0");
  const Eigen::VectorXd k1 = f(x, t);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt);
  const Eigen::VectorXd k4 = f(x + dt * k3, t + dt);
  Eigen::VectorXd out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check_finite(out, t + dt);
  return out;
}

namespace {

// Closed-loop right-hand side over the packed state
// [phi_g, phi_d, omega, theta, theta_c, eta...].
struct ClosedLoop {
  const ScenarioConfig& cfg;
  const SensorlessController& ctrl;
  bool inject;

  // Carrier value used for the current step; square waves switch exactly
  // on step boundaries, so the value held at the step start integrates
  // the piecewise dynamics without smearing the discontinuity. When dt
  // divides the period evenly the sign comes from the integer step index
  // (a value from fmod(omega t, 2 pi) sits roundoff-close to the switch
  // and would jitter switches by a whole step).
  double f_held = 0.0;
  long steps_per_period = 0;

  void init_carrier() {
    if (!inject || cfg.inj.waveform != Waveform::SquareWave) return;
    const double ratio = cfg.inj.period() / cfg.dt;
    const long n = std::lround(ratio);
    if (n > 0 && n % 2 == 0 && std::abs(ratio - n) < 1e-9 * ratio) {
      steps_per_period = n;
    }
  }

  void hold_carrier(std::size_t step, double t_step) {
    if (!inject || cfg.inj.waveform != Waveform::SquareWave) return;
    if (steps_per_period > 0) {
      const long j = static_cast<long>(step % steps_per_period);
      f_held = j < steps_per_period / 2 ? 1.0 : -1.0;
    } else {
      f_held = f_eval(cfg.inj.omega_inj * t_step, cfg.inj.waveform);
    }
  }

  Vec2 injection(double t) const {
    if (!inject) return Vec2::Zero();
    const double f = cfg.inj.waveform == Waveform::SquareWave
                         ? f_held
                         : f_eval(cfg.inj.omega_inj * t, cfg.inj.waveform);
    return cfg.inj.u_tilde * f;
  }

  void eval(const Eigen::VectorXd& x, double t, Eigen::VectorXd& dx) const {
    MotorStateGd s;
    s.phi_gd = Vec2(x(0), x(1));
    s.omega = x(2);
    s.theta = x(3);
    s.theta_c = x(4);
    const Mat2 rot = rotation(s.theta - s.theta_c);
    const Vec2 i_gd =
        rot * current_from_flux(rot.transpose() * s.phi_gd, cfg.params.mag);
    const ControllerCommand cmd =
        ctrl.step(i_gd, s.theta_c, x.tail(x.size() - 5), t);
    const Vec2 u_gd = cmd.u_gd + injection(t);
    const GdRates r = gd_derivatives(s, u_gd, cmd.omega_c,
                                     cfg.profiles.tau_load(t), cfg.params);
    dx(0) = r.dphi_gd(0);
    dx(1) = r.dphi_gd(1);
    dx(2) = r.domega;
    dx(3) = r.dtheta;
    dx(4) = r.dtheta_c;
    if (x.size() > 5) dx.tail(x.size() - 5) = cmd.eta_dot;
  }
};

Trajectory integrate(const ScenarioConfig& cfg, const SensorlessController& ctrl,
                     bool inject) {
  cfg.validate();
  const std::size_t n_steps =
      static_cast<std::size_t>(std::floor(cfg.t_end / cfg.dt + 1e-9));
  const std::size_t n_samples = n_steps + 1;

  Trajectory traj;
  traj.dt = cfg.dt;
  for (auto* col :
       {&traj.t, &traj.phi_gamma, &traj.phi_delta, &traj.omega, &traj.theta,
        &traj.theta_c, &traj.i_gamma, &traj.i_delta, &traj.u_gamma,
        &traj.u_delta}) {
    col->resize(n_samples);
  }
  for (auto* col : {&traj.i_bar_gamma, &traj.i_bar_delta, &traj.i_tilde_gamma,
                    &traj.i_tilde_delta, &traj.theta_hat, &traj.err_deg}) {
    col->assign(n_samples, kNan);
  }
  traj.est_valid.assign(n_samples, 0);

  ClosedLoop loop{cfg, ctrl, inject && cfg.inj.u_tilde.norm() > 0.0};
  loop.init_carrier();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = cfg.current_noise_std > 0.0;

  const int dim = 5 + ctrl.eta_dim();
  Eigen::VectorXd x(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  x.setZero();
  x(0) = cfg.initial.phi_gd(0);
  x(1) = cfg.initial.phi_gd(1);
  x(2) = cfg.initial.omega;
  x(3) = cfg.initial.theta;
  x(4) = cfg.initial.theta_c;
  if (loop.inject) {
    // The configured initial state is the slowly-varying component; the
    // physical flux rides the injection ripple around it.
    const Vec2 offset = (cfg.inj.u_tilde / cfg.inj.omega_inj) *
                        f_primitive(0.0, cfg.inj.waveform);
    x(0) += offset(0);
    x(1) += offset(1);
  }

  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    loop.hold_carrier(k, t);

    // Record the sample.
    traj.t[k] = t;
    traj.phi_gamma[k] = x(0);
    traj.phi_delta[k] = x(1);
    traj.omega[k] = x(2);
    traj.theta[k] = x(3);
    traj.theta_c[k] = x(4);
    {
      const Mat2 rot = rotation(x(3) - x(4));
      Vec2 i_gd = rot * current_from_flux(rot.transpose() * Vec2(x(0), x(1)),
                                          cfg.params.mag);
      const ControllerCommand cmd =
          ctrl.step(i_gd, x(4), x.tail(dim - 5), t);
      const Vec2 u_gd = cmd.u_gd + loop.injection(t);
      if (noisy) {
        i_gd(0) += cfg.current_noise_std * gauss(rng);
        i_gd(1) += cfg.current_noise_std * gauss(rng);
      }
      traj.i_gamma[k] = i_gd(0);
      traj.i_delta[k] = i_gd(1);
      traj.u_gamma[k] = u_gd(0);
      traj.u_delta[k] = u_gd(1);
    }
    if (k == n_steps) break;

    // Classical RK4 step from t to t + dt.
    loop.eval(x, t, k1);
    tmp = x + 0.5 * cfg.dt * k1;
    loop.eval(tmp, t + 0.5 * cfg.dt, k2);
    tmp = x + 0.5 * cfg.dt * k2;
    loop.eval(tmp, t + 0.5 * cfg.dt, k3);
    tmp = x + cfg.dt * k3;
    loop.eval(tmp, t + cfg.dt, k4);
    x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_finite(x, t + cfg.dt);
  }
  return traj;
}

}  // namespace

Trajectory run_closed_loop(const ScenarioConfig& cfg,
                           const SensorlessController& ctrl) {
  return integrate(cfg, ctrl, true);
}

Trajectory run_averaged(const ScenarioConfig& cfg,
                        const SensorlessController& ctrl) {
  return integrate(cfg, ctrl, false);
}

std::vector<AveragingRow> verify_averaging(const ScenarioConfig& cfg,
                                           const SensorlessController& ctrl,
                                           const std::vector<double>& omegas) {
  std::vector<AveragingRow> rows;
  rows.reserve(omegas.size());
  for (double omega : omegas) {
    ScenarioConfig row_cfg = cfg;
    row_cfg.inj.omega_inj = omega;
    row_cfg.dt = row_cfg.inj.period() / 64.0;

    // Both runs share the slowly-varying initial state; run_closed_loop
    // adds the instantaneous ripple offset itself.
    const Trajectory full = run_closed_loop(row_cfg, ctrl);
    const Trajectory avg = run_averaged(row_cfg, ctrl);

    const std::size_t n = full.size();
    const std::size_t k0 = static_cast<std::size_t>(
        std::ceil(0.2 * static_cast<double>(n - 1)));
    AveragingRow row{omega, 0.0, 0.0, 0.0};
    double d_theta = 0.0;
    double d_omega = 0.0;
    for (std::size_t k = k0; k < n; ++k) {
      d_theta = std::max(d_theta, std::abs(full.theta[k] - avg.theta[k]));
      d_omega = std::max(d_omega, std::abs(full.omega[k] - avg.omega[k]));
      const Vec2 d_phi(full.phi_gamma[k] - avg.phi_gamma[k],
                       full.phi_delta[k] - avg.phi_delta[k]);
      const Vec2 ripple = (row_cfg.inj.u_tilde / omega) *
                          f_primitive(omega * full.t[k], row_cfg.inj.waveform);
      row.e_flux = std::max(row.e_flux, (d_phi - ripple).norm());
      row.e_flux_raw = std::max(row.e_flux_raw, d_phi.norm());
    }
    row.e_mech = d_theta + d_omega * 1.0;  // omega gap weighted by 1 s
    rows.push_back(row);
  }
  return rows;
}

MotorStateGd vf_equilibrium(double omega_c, const Vec2& u_slow, double tau_L,
                            const MotorParams& p) {
  const Mat2 k = skew90();
  const Vec2 phi_m = p.mag.magnet_flux();

  // Residual of the steady-state conditions at omega = omega_c:
  // flux balance (2 components) and torque balance, over z = (phi_gd, mu).
  const auto residual = [&](const Eigen::Vector3d& z) -> Eigen::Vector3d {
    const Vec2 phi(z(0), z(1));
    const Mat2 rot = rotation(z(2));
    const Vec2 i = rot * current_from_flux(rot.transpose() * phi, p.mag);
    const Vec2 phi_m_gd = rot * phi_m;
    Eigen::Vector3d r;
    r.head<2>() =
        u_slow - p.R * i - omega_c * (k * phi) - omega_c * (k * phi_m_gd);
    r(2) = 1.5 * i.dot(k * (phi + phi_m_gd)) - tau_L / p.n;
    return r;
  };

  // Seed: unsaturated flux balance at mu = 0.
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  {
    Mat2 a;
    a << p.R / p.mag.Ld, 0.0, 0.0, p.R / p.mag.Lq;
    a += omega_c * k;
    const Vec2 rhs = u_slow - omega_c * (k * phi_m);
    z.head<2>() = a.fullPivLu().solve(rhs);
  }

  Eigen::Vector3d r = residual(z);
  const double tol =
      1e-12 * std::max({1.0, u_slow.norm(), std::abs(tau_L) / p.n});
  for (int iter = 0; iter < 100; ++iter) {
    if (r.norm() <= tol) break;
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1e-2, std::abs(z(j)));
      Eigen::Vector3d zp = z, zm = z;
      zp(j) += h;
      zm(j) -= h;
      jac.col(j) = (residual(zp) - residual(zm)) / (2.0 * h);
    }
    const Eigen::Vector3d step = jac.fullPivLu().solve(r);
    double scale = 1.0;
    Eigen::Vector3d cand = z - step;
    Eigen::Vector3d cand_r = residual(cand);
    for (int h = 0; h < 30 && cand_r.norm() > r.norm(); ++h) {
      scale *= 0.5;
      cand = z - scale * step;
      cand_r = residual(cand);
    }
    z = cand;
    r = cand_r;
  }
  if (!(r.norm() <= 1e-8 * std::max(1.0, u_slow.norm()))) {
    throw NonConvergent("vf_equilibrium: no steady state found");
  }

  MotorStateGd s;
  s.phi_gd = Vec2(z(0), z(1));
  s.omega = omega_c;
  s.theta = z(2);
  s.theta_c = 0.0;
  return s;
}

}  // namespace pmsm
