#include "pmsmsim/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "pmsmsim/errors.hpp"

namespace pmsm {

double f_eval(double sigma, Waveform w) {
  if (w == Waveform::Sinusoid) return std::cos(sigma);
  double s = std::fmod(sigma, 2.0 * M_PI);
  if (s < 0.0) s += 2.0 * M_PI;
  return s < M_PI ? 1.0 : -1.0;
}

double f_primitive(double sigma, Waveform w) {
  if (w == Waveform::Sinusoid) return std::sin(sigma);
  double s = std::fmod(sigma, 2.0 * M_PI);
  if (s < 0.0) s += 2.0 * M_PI;
  return s <= M_PI ? s - M_PI / 2.0 : 3.0 * M_PI / 2.0 - s;
}

double f_primitive_mean_square(Waveform w) {
  return w == Waveform::SquareWave ? M_PI * M_PI / 12.0 : 0.5;
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> times,
                                 std::vector<double> values)
    : t_(std::move(times)), v_(std::move(values)) {
  if (t_.size() != v_.size() || t_.empty()) {
    throw ValidationError("profile needs matching, non-empty breakpoints");
  }
  for (std::size_t k = 1; k < t_.size(); ++k) {
    if (!(t_[k] > t_[k - 1])) {
      throw ValidationError("profile breakpoints must be strictly increasing");
    }
  }
  for (double v : v_) {
    if (!std::isfinite(v)) throw ValidationError("profile value not finite");
  }
}

PiecewiseLinear PiecewiseLinear::constant(double value) {
  PiecewiseLinear p({0.0}, {value});
  p.unbounded_ = true;
  return p;
}

double PiecewiseLinear::operator()(double t) const {
  if (t_.empty()) throw OutOfProfileDomain("empty profile");
  if (unbounded_) return v_.front();
  if (t < t_.front() || t > t_.back()) {
    throw OutOfProfileDomain("profile evaluated at t outside breakpoints");
  }
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  if (it == t_.end()) return v_.back();
  const std::size_t hi = static_cast<std::size_t>(it - t_.begin());
  if (hi == 0) return v_.front();
  const double w = (t - t_[hi - 1]) / (t_[hi] - t_[hi - 1]);
  return v_[hi - 1] + w * (v_[hi] - v_[hi - 1]);
}

DqRates dq_derivatives(const MotorStateDq& s, const Vec2& u_dq, double tau_L,
                       const MotorParams& p) {
  const Mat2 k = skew90();
  const CurrentDq i = current_from_flux(s.phi, p.mag);
  const Vec2 phi_tot = s.phi + p.mag.magnet_flux();
  DqRates r;
  r.dphi = u_dq - p.R * i - s.omega * (k * phi_tot);
  r.domega = (static_cast<double>(p.n) * p.n / p.J) *
             (1.5 * i.dot(k * phi_tot) - tau_L / p.n);
  r.dtheta = s.omega;
  return r;
}

GdRates gd_derivatives(const MotorStateGd& s, const Vec2& u_gd, double omega_c,
                       double tau_L, const MotorParams& p) {
  const Mat2 k = skew90();
  const Mat2 rot = rotation(s.theta - s.theta_c);
  const Vec2 i_gd = rot * current_from_flux(rot.transpose() * s.phi_gd, p.mag);
  const Vec2 phi_m_gd = rot * p.mag.magnet_flux();
  GdRates r;
  r.dphi_gd = u_gd - p.R * i_gd - omega_c * (k * s.phi_gd) -
              s.omega * (k * phi_m_gd);
  r.domega = (static_cast<double>(p.n) * p.n / p.J) *
             (1.5 * i_gd.dot(k * (s.phi_gd + phi_m_gd)) - tau_L / p.n);
  r.dtheta = s.omega;
  r.dtheta_c = omega_c;
  return r;
}

ControllerCommand VfController::step(const Vec2& /*i_gd*/, double /*theta_c*/,
                                     const Eigen::VectorXd& /*eta*/,
                                     double t) const {
  const double wc = profiles_.omega_c(t);
  // Back-EMF feed-forward: at synchronism the magnet EMF is
  // omega K phi_m, i.e. (0, omega lambda_m).
  ControllerCommand cmd;
  cmd.omega_c = wc;
  cmd.u_gd = profiles_.u_rd(t) + wc * Vec2(0.0, lambda_m_);
  return cmd;
}

std::pair<double, Vec2> vf_control(double t, const DriveProfiles& profiles,
                                   const InjectionSpec& inj,
                                   const MagModel& mag) {
  VfController ctrl(profiles, mag);
  ControllerCommand cmd = ctrl.step(Vec2::Zero(), 0.0, Eigen::VectorXd(), t);
  Vec2 u = cmd.u_gd;
  if (inj.u_tilde.norm() > 0.0) {
    u += inj.u_tilde * f_eval(inj.omega_inj * t, inj.waveform);
  }
  return {cmd.omega_c, u};
}

}  // namespace pmsm
