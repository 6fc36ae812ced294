#include "pmsmsim/demod.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "pmsmsim/errors.hpp"

namespace pmsm {

DemodConfig::DemodConfig(double omega_inj_, double dt_, Waveform waveform_)
    : omega_inj(omega_inj_), dt(dt_), waveform(waveform_) {
  if (!(omega_inj > 0.0)) throw ValidationError("demod: omega_inj must be > 0");
  if (!(dt > 0.0)) throw ValidationError("demod: dt must be > 0");
  const double ratio = period() / dt;
  window = static_cast<int>(std::lround(ratio));
  if (window < 16) {
    throw ValidationError("demod: need at least 16 samples per period");
  }
  if (std::abs(ratio - window) > 1e-6 * ratio) {
    throw ValidationError(
        "demod: sample period must divide the injection period");
  }
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Trailing trapezoidal window over samples [k - N, k]: endpoints weighted
// half, interior weighted one; spans exactly one injection period.
template <typename Weight>
DemodResult windowed(const Eigen::Matrix2Xd& samples, const DemodConfig& cfg,
                     double norm, const Weight& weight) {
  const int n = cfg.window;
  const Eigen::Index cols = samples.cols();
  if (cols <= n) throw SeriesTooShort("demod: series shorter than one window");

  DemodResult out;
  out.values.setConstant(2, cols, kNan);
  out.first_valid = n;
  for (Eigen::Index k = n; k < cols; ++k) {
    Vec2 acc = Vec2::Zero();
    for (int j = 0; j <= n; ++j) {
      const Eigen::Index idx = k - n + j;
      const double w = (j == 0 || j == n) ? 0.5 : 1.0;
      acc += (w * weight(idx)) * samples.col(idx);
    }
    out.values.col(k) = acc * (cfg.dt / norm);
  }
  return out;
}

}  // namespace

DemodResult sliding_mean(const Eigen::Matrix2Xd& samples,
                         const DemodConfig& cfg) {
  const double span = cfg.window * cfg.dt;
  return windowed(samples, cfg, span, [](Eigen::Index) { return 1.0; });
}

DemodResult sliding_correlate(const Eigen::Matrix2Xd& samples,
                              const DemodConfig& cfg) {
  // F at the absolute sample phases; one period of values repeats.
  std::vector<double> f_tab(cfg.window);
  for (int j = 0; j < cfg.window; ++j) {
    f_tab[j] = f_primitive(cfg.omega_inj * (j * cfg.dt), cfg.waveform);
  }
  const auto f_at = [&](Eigen::Index idx) {
    return f_tab[static_cast<std::size_t>(idx) % f_tab.size()];
  };

  // Normalize by the same quadrature applied to F^2 so that a pure
  // a*F(Omega t) input returns exactly a.
  double norm = 0.0;
  for (int j = 0; j <= cfg.window; ++j) {
    const double w = (j == 0 || j == cfg.window) ? 0.5 : 1.0;
    norm += w * f_at(j) * f_at(j);
  }
  norm *= cfg.dt;
  return windowed(samples, cfg, norm, f_at);
}

}  // namespace pmsm
