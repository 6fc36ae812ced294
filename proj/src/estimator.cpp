#include "pmsmsim/estimator.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "pmsmsim/demod.hpp"
#include "pmsmsim/errors.hpp"

namespace pmsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * M_PI);
  if (r <= -M_PI) r += 2.0 * M_PI;
  return r;
}

void EstimatorConfig::validate() const {
  if (grid_size < 90) throw ValidationError("estimator.grid_size must be >= 90");
  if (!(refine_tol > 0.0)) {
    throw ValidationError("estimator.refine_tol must be > 0");
  }
  if (!(continuity_window > 0.0)) {
    throw ValidationError("estimator.continuity_window must be > 0");
  }
}

double residual(double mu, const Vec2& i_tilde, const Vec2& i_bar,
                const Vec2& u_tilde, double omega_inj, const MagModel& mag) {
  const Vec2 model = saliency_matrix(mu, i_bar, mag) * (u_tilde / omega_inj);
  return (i_tilde - model).squaredNorm();
}

namespace {

// Residual evaluator that warm-starts the flux inversion from the last
// solution; successive mu values along a sweep differ little.
class ResidualEval {
 public:
  ResidualEval(const Vec2& i_tilde, const Vec2& i_bar, const Vec2& v,
               const MagModel& mag)
      : i_tilde_(i_tilde), i_bar_(i_bar), v_(v), mag_(mag) {}

  double operator()(double mu) {
    const Mat2 rot = rotation(mu);
    const CurrentDq i_rot = rot.transpose() * i_bar_;
    const FluxDq phi =
        have_seed_ ? flux_from_current_exact(i_rot, mag_, seed_)
                   : flux_from_current_exact(i_rot, mag_);
    seed_ = phi;
    have_seed_ = true;
    const Vec2 model = rot * (hessian(phi, mag_) * (rot.transpose() * v_));
    return (i_tilde_ - model).squaredNorm();
  }

 private:
  Vec2 i_tilde_, i_bar_, v_;
  const MagModel& mag_;
  FluxDq seed_{0.0, 0.0};
  bool have_seed_ = false;
};

struct Minimum {
  double mu;
  double value;
};

// Golden-section refinement on [a, b]; returns the best point seen.
Minimum golden_refine(ResidualEval& f, double a, double b, double tol) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? Minimum{c, fc} : Minimum{d, fd};
}

}  // namespace

PositionEstimate estimate(const Vec2& i_tilde, const Vec2& i_bar,
                          const Vec2& u_tilde, double omega_inj,
                          double theta_c, std::optional<double> prev_theta_hat,
                          const EstimatorConfig& cfg) {
  cfg.validate();
  if (!(u_tilde.norm() > 0.0)) {
    throw NoInjection("estimate: injection amplitude is zero");
  }

  const int g = cfg.grid_size;
  const double step = 2.0 * M_PI / g;
  ResidualEval eval(i_tilde, i_bar, u_tilde / omega_inj, cfg.mag);

  // Grid over (-pi, pi].
  std::vector<double> mu(g), r(g);
  for (int j = 0; j < g; ++j) {
    mu[j] = -M_PI + (j + 1) * step;
    r[j] = eval(mu[j]);
  }

  // Local minima on the periodic grid.
  std::vector<int> minima;
  for (int j = 0; j < g; ++j) {
    const double prev = r[(j + g - 1) % g];
    const double next = r[(j + 1) % g];
    if (r[j] < prev && r[j] <= next) minima.push_back(j);
  }
  if (minima.empty()) {
    // Flat landscape (no saliency): every point is equivalent.
    int jb = 0;
    for (int j = 1; j < g; ++j) {
      if (r[j] < r[jb]) jb = j;
    }
    PositionEstimate flat;
    flat.mu = mu[jb];
    flat.residual = r[jb];
    flat.runner_up_mu = wrap_angle(mu[jb] + M_PI);
    flat.runner_up_residual = r[jb];
    flat.ambiguous = true;
    flat.theta_hat = theta_c + flat.mu;
    return flat;
  }

  int jb = minima.front();
  for (int j : minima) {
    if (r[j] < r[jb]) jb = j;
  }
  Minimum best =
      golden_refine(eval, mu[jb] - step, mu[jb] + step, cfg.refine_tol);
  if (r[jb] < best.value) best = Minimum{mu[jb], r[jb]};

  // Runner-up: best local minimum in a different grid basin.
  Minimum runner{kNan, kInf};
  int jr = -1;
  for (int j : minima) {
    const int dist = std::abs(j - jb);
    if (std::min(dist, g - dist) <= 1) continue;
    if (jr < 0 || r[j] < r[jr]) jr = j;
  }
  if (jr >= 0) {
    runner = golden_refine(eval, mu[jr] - step, mu[jr] + step, cfg.refine_tol);
    if (r[jr] < runner.value) runner = Minimum{mu[jr], r[jr]};
  }

  PositionEstimate out;
  out.ambiguous =
      runner.value <= 1.1 * best.value + 1e-12 * i_tilde.squaredNorm();
  out.residual = best.value;
  out.runner_up_mu = wrap_angle(runner.mu);
  out.runner_up_residual = runner.value;

  double chosen = best.mu;
  if (out.ambiguous) {
    // Two comparable solutions: keep temporal continuity, or stay nearest
    // zero when no history exists.
    double ref = 0.0;
    if (cfg.policy == InitialGuessPolicy::NearestPrevious && prev_theta_hat) {
      ref = wrap_angle(*prev_theta_hat - theta_c);
    }
    const double d_best = std::abs(wrap_angle(best.mu - ref));
    const double d_runner = std::abs(wrap_angle(runner.mu - ref));
    if (d_runner < d_best && d_runner <= cfg.continuity_window) {
      chosen = runner.mu;
      out.residual = runner.value;
      out.runner_up_mu = wrap_angle(best.mu);
      out.runner_up_residual = best.value;
    }
  }
  out.mu = wrap_angle(chosen);
  out.theta_hat = theta_c + out.mu;
  return out;
}

void estimate_trajectory(Trajectory& traj, const InjectionSpec& inj,
                         const EstimatorConfig& cfg) {
  cfg.validate();
  const std::size_t n = traj.size();
  Eigen::Matrix2Xd currents(2, n);
  for (std::size_t k = 0; k < n; ++k) {
    currents(0, k) = traj.i_gamma[k];
    currents(1, k) = traj.i_delta[k];
  }

  const DemodConfig dcfg(inj.omega_inj, traj.dt, inj.waveform);
  // Two-stage demodulation: the one-period window's first moment leaks
  // the slope of the slow component into the ripple channel, with a sign
  // that cycles through the window phase; a second one-period mean
  // averages that leak to zero (the classic cascaded boxcar of lock-in
  // detection). NaN warm-up samples of the first stage propagate.
  const DemodResult mean = sliding_mean(sliding_mean(currents, dcfg).values,
                                        dcfg);
  const DemodResult corr =
      sliding_mean(sliding_correlate(currents, dcfg).values, dcfg);

  // Center alignment: the cascaded window ending at k + window measures
  // the envelopes around sample k.
  const std::size_t window = static_cast<std::size_t>(dcfg.window);
  if (n <= 2 * window) throw SeriesTooShort("trajectory too short");
  const std::size_t k_begin = window;
  const std::size_t k_end = n - 1 - window;

  std::optional<double> prev;
  for (std::size_t k = k_begin; k <= k_end; ++k) {
    const Vec2 i_bar = mean.values.col(k + window);
    const Vec2 i_tilde = corr.values.col(k + window);
    const PositionEstimate est = estimate(i_tilde, i_bar, inj.u_tilde,
                                          inj.omega_inj, traj.theta_c[k], prev,
                                          cfg);
    prev = est.theta_hat;
    traj.i_bar_gamma[k] = i_bar(0);
    traj.i_bar_delta[k] = i_bar(1);
    traj.i_tilde_gamma[k] = i_tilde(0);
    traj.i_tilde_delta[k] = i_tilde(1);
    traj.theta_hat[k] = est.theta_hat;
    traj.err_deg[k] =
        wrap_angle(est.theta_hat - traj.theta[k]) * 180.0 / M_PI;
    traj.est_valid[k] = 1;
  }
  traj.has_estimates = true;
}

}  // namespace pmsm
