#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "pmsmsim/magnetics.hpp"

namespace pmsm {

/// Full electromechanical parameter set.
struct MotorParams {
  MagModel mag;
  double R = 0.0;   // stator resistance (Ohm)
  int n = 1;        // pole pairs
  double J = 1e-3;  // inertia (kg m^2)
};

/// State in the rotor-synchronous d-q frame. Angles are electrical
/// radians and are kept unwrapped.
struct MotorStateDq {
  FluxDq phi{0.0, 0.0};  // current-produced flux linkage (Wb)
  double omega = 0.0;    // electrical speed (rad/s)
  double theta = 0.0;    // electrical angle (rad)
};

/// State in the controller's gamma-delta frame (rotated from d-q by
/// theta - theta_c), plus the controller angle itself.
struct MotorStateGd {
  Vec2 phi_gd{0.0, 0.0};
  double omega = 0.0;
  double theta = 0.0;
  double theta_c = 0.0;
};

enum class Waveform { SquareWave, Sinusoid };

/// Injected probing voltage u_tilde * f(omega_inj * t).
struct InjectionSpec {
  Vec2 u_tilde{0.0, 0.0};  // amplitude, gamma-delta components (V)
  double omega_inj = 0.0;  // pulsation (rad/s)
  Waveform waveform = Waveform::SquareWave;

  double period() const { return 2.0 * M_PI / omega_inj; }
};

/// Unit-amplitude 2pi-periodic zero-mean carrier.
/// SquareWave: +1 on [0, pi), -1 on [pi, 2pi). Sinusoid: cos.
double f_eval(double sigma, Waveform w);

/// Zero-mean primitive of f_eval. SquareWave: triangle with peak pi/2
/// at sigma = pi. Sinusoid: sin.
double f_primitive(double sigma, Waveform w);

/// Mean-square of f_primitive over one period (pi^2/12 for the square
/// wave, 1/2 for the sinusoid).
double f_primitive_mean_square(Waveform w);

/// Piecewise-linear time profile over strictly increasing breakpoints.
/// Evaluation outside the breakpoint range throws OutOfProfileDomain.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> times, std::vector<double> values);

  /// Constant profile valid for all t.
  static PiecewiseLinear constant(double value);

  double operator()(double t) const;
  bool empty() const { return t_.empty(); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::vector<double> t_;
  std::vector<double> v_;
  bool unbounded_ = false;  // constant profiles have no domain limits
};

/// Reference speed, resistive-drop compensation and load torque profiles
/// driving an open-loop scenario.
struct DriveProfiles {
  PiecewiseLinear omega_c = PiecewiseLinear::constant(0.0);
  PiecewiseLinear u_rd_gamma = PiecewiseLinear::constant(0.0);
  PiecewiseLinear u_rd_delta = PiecewiseLinear::constant(0.0);
  PiecewiseLinear tau_load = PiecewiseLinear::constant(0.0);

  Vec2 u_rd(double t) const { return Vec2(u_rd_gamma(t), u_rd_delta(t)); }
};

struct DqRates {
  Vec2 dphi;
  double domega;
  double dtheta;
};

struct GdRates {
  Vec2 dphi_gd;
  double domega;
  double dtheta;
  double dtheta_c;
};

/// d-q frame state equations:
///   dphi/dt  = u - R i - omega K (phi + phi_m)
///   domega/dt = (n^2/J) [ (3/2) i' K (phi + phi_m) - tau_L / n ]
///   dtheta/dt = omega
/// with i = current_from_flux(phi) and K the 90-degree rotation.
DqRates dq_derivatives(const MotorStateDq& s, const Vec2& u_dq, double tau_L,
                       const MotorParams& p);

/// Same dynamics written in the gamma-delta frame, driven by the
/// controller speed omega_c; also advances theta_c.
GdRates gd_derivatives(const MotorStateGd& s, const Vec2& u_gd, double omega_c,
                       double tau_L, const MotorParams& p);

/// One evaluation of a sensorless control law: commanded frame speed,
/// slow voltage (before injection), and the internal-state derivative.
struct ControllerCommand {
  double omega_c = 0.0;
  Vec2 u_gd{0.0, 0.0};
  Eigen::VectorXd eta_dot;
};

/// General sensorless control law interface. Implementations must be
/// pure functions of (i_gd, theta_c, eta, t); the high-frequency
/// injection is superimposed by the simulator, not by the controller.
class SensorlessController {
 public:
  virtual ~SensorlessController() = default;
  virtual int eta_dim() const { return 0; }
  virtual ControllerCommand step(const Vec2& i_gd, double theta_c,
                                 const Eigen::VectorXd& eta, double t) const = 0;
};

/// Open-loop V/f law: omega_c from the speed profile and
/// u_gd = u_rd(t) + omega_c(t) K phi_m. Ignores the measured currents
/// and carries no internal state.
class VfController : public SensorlessController {
 public:
  VfController(DriveProfiles profiles, const MagModel& mag)
      : profiles_(std::move(profiles)), lambda_m_(mag.lambda_m) {}

  ControllerCommand step(const Vec2& i_gd, double theta_c,
                         const Eigen::VectorXd& eta, double t) const override;

  const DriveProfiles& profiles() const { return profiles_; }

 private:
  DriveProfiles profiles_;
  double lambda_m_;
};

/// Fixed-output controller, for tests.
class ConstantController : public SensorlessController {
 public:
  ConstantController(double omega_c, const Vec2& u_gd)
      : omega_c_(omega_c), u_gd_(u_gd) {}

  ControllerCommand step(const Vec2&, double, const Eigen::VectorXd&,
                         double) const override {
    return ControllerCommand{omega_c_, u_gd_, Eigen::VectorXd()};
  }

 private:
  double omega_c_;
  Vec2 u_gd_;
};

/// V/f law with the injection term included:
/// returns omega_c(t) and u_rd(t) + omega_c(t) K phi_m + u_tilde f(Omega t).
std::pair<double, Vec2> vf_control(double t, const DriveProfiles& profiles,
                                   const InjectionSpec& inj,
                                   const MagModel& mag);

}  // namespace pmsm
