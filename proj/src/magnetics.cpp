#include "pmsmsim/magnetics.hpp"

#include <cmath>

#include "pmsmsim/errors.hpp"

namespace pmsm {

Mat2 rotation(double mu) {
  const double c = std::cos(mu);
  const double s = std::sin(mu);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

double energy(const FluxDq& phi, const MagModel& m) {
  const double pd = phi(0);
  const double pq = phi(1);
  const double pd2 = pd * pd;
  const double pq2 = pq * pq;
  return pd2 / (2.0 * m.Ld) + pq2 / (2.0 * m.Lq) + m.alpha30 * pd2 * pd +
         m.alpha12 * pd * pq2 + m.alpha40 * pd2 * pd2 +
         m.alpha22 * pd2 * pq2 + m.alpha04 * pq2 * pq2;
}

CurrentDq current_from_flux(const FluxDq& phi, const MagModel& m) {
  const double pd = phi(0);
  const double pq = phi(1);
  const double pd2 = pd * pd;
  const double pq2 = pq * pq;
  return CurrentDq(pd / m.Ld + 3.0 * m.alpha30 * pd2 + m.alpha12 * pq2 +
                       4.0 * m.alpha40 * pd2 * pd +
                       2.0 * m.alpha22 * pd * pq2,
                   pq / m.Lq + 2.0 * m.alpha12 * pd * pq +
                       2.0 * m.alpha22 * pd2 * pq +
                       4.0 * m.alpha04 * pq2 * pq);
}

FluxDq flux_from_current_first_order(const CurrentDq& i, const MagModel& m) {
  const double id = i(0);
  const double iq = i(1);
  const double Ld = m.Ld;
  const double Lq = m.Lq;
  const double id2 = id * id;
  const double iq2 = iq * iq;
  const double pd =
      Ld * (id - 3.0 * m.alpha30 * Ld * Ld * id2 - m.alpha12 * Lq * Lq * iq2 -
            4.0 * m.alpha40 * Ld * Ld * Ld * id2 * id -
            2.0 * m.alpha22 * Ld * Lq * Lq * id * iq2);
  const double pq =
      Lq * (iq - 2.0 * m.alpha12 * Ld * Lq * id * iq -
            2.0 * m.alpha22 * Ld * Ld * Lq * id2 * iq -
            4.0 * m.alpha04 * Lq * Lq * Lq * iq2 * iq);
  return FluxDq(pd, pq);
}

Mat2 hessian(const FluxDq& phi, const MagModel& m) {
  const double pd = phi(0);
  const double pq = phi(1);
  const double hdd = 1.0 / m.Ld + 6.0 * m.alpha30 * pd +
                     12.0 * m.alpha40 * pd * pd + 2.0 * m.alpha22 * pq * pq;
  const double hdq = 2.0 * m.alpha12 * pq + 4.0 * m.alpha22 * pd * pq;
  const double hqq = 1.0 / m.Lq + 2.0 * m.alpha12 * pd +
                     2.0 * m.alpha22 * pd * pd + 12.0 * m.alpha04 * pq * pq;
  Mat2 h;
  h << hdd, hdq, hdq, hqq;
  return h;
}

namespace {

// 2x2 solve with an explicit conditioning guard.
Vec2 solve_guarded(const Mat2& g, const Vec2& rhs) {
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  if (!(std::abs(det) > 1e-12 * g.squaredNorm())) {
    throw SingularJacobian("magnetization Hessian is numerically singular");
  }
  return Vec2((g(1, 1) * rhs(0) - g(0, 1) * rhs(1)) / det,
              (g(0, 0) * rhs(1) - g(1, 0) * rhs(0)) / det);
}

}  // namespace

FluxDq flux_from_current_exact(const CurrentDq& i, const MagModel& m,
                               const FluxDq& seed) {
  const double tol = 1e-9 * std::max(1.0, i.norm());
  FluxDq phi = seed;
  double res = (current_from_flux(phi, m) - i).norm();
  for (int iter = 0; iter < 50; ++iter) {
    if (res <= tol) return phi;
    const Mat2 g = hessian(phi, m);
    const Vec2 step = solve_guarded(g, current_from_flux(phi, m) - i);
    // Damped update: halve the step while the residual grows.
    double scale = 1.0;
    FluxDq cand = phi - step;
    double cand_res = (current_from_flux(cand, m) - i).norm();
    for (int h = 0; h < 20 && cand_res > res; ++h) {
      scale *= 0.5;
      cand = phi - scale * step;
      cand_res = (current_from_flux(cand, m) - i).norm();
    }
    phi = cand;
    res = cand_res;
  }
  if (res <= tol) return phi;
  throw NonConvergent("flux_from_current_exact: no convergence in 50 steps");
}

FluxDq flux_from_current_exact(const CurrentDq& i, const MagModel& m) {
  return flux_from_current_exact(i, m, flux_from_current_first_order(i, m));
}

Mat2 g_matrix_of_current(const CurrentDq& i, const MagModel& m) {
  const double id = i(0);
  const double iq = i(1);
  const double Ld = m.Ld;
  const double Lq = m.Lq;
  const double gdd = 1.0 / Ld + 6.0 * m.alpha30 * Ld * id +
                     12.0 * m.alpha40 * Ld * Ld * id * id +
                     2.0 * m.alpha22 * Lq * Lq * iq * iq;
  const double gdq =
      2.0 * m.alpha12 * Lq * iq + 4.0 * m.alpha22 * Ld * id * Lq * iq;
  const double gqq = 1.0 / Lq + 2.0 * m.alpha12 * Ld * id +
                     2.0 * m.alpha22 * Ld * Ld * id * id +
                     12.0 * m.alpha04 * Lq * Lq * iq * iq;
  Mat2 g;
  g << gdd, gdq, gdq, gqq;
  return g;
}

Mat2 inductance_matrix(const CurrentDq& i, const MagModel& m) {
  const Mat2 g = g_matrix_of_current(i, m);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  if (std::abs(det) < 1e-12 * g.squaredNorm()) {
    throw SingularJacobian("inductance_matrix: G is numerically singular");
  }
  Mat2 l;
  l << g(1, 1) / det, -g(0, 1) / det, -g(1, 0) / det, g(0, 0) / det;
  return l;
}

Mat2 saliency_matrix(double mu, const CurrentDq& i_bar, const MagModel& m) {
  const Mat2 r = rotation(mu);
  const FluxDq phi = flux_from_current_exact(r.transpose() * i_bar, m);
  return r * hessian(phi, m) * r.transpose();
}

}  // namespace pmsm
