#include <doctest.h>

#include <cmath>
#include <random>

#include "pmsmsim/errors.hpp"
#include "pmsmsim/magnetics.hpp"
#include "pmsmsim/presets.hpp"

using namespace pmsm;

namespace {

const MagModel kTable = table1_params().mag;
const double kIn = rated_current();

FluxDq random_flux(std::mt19937& rng, double radius) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> mag(0.0, radius);
  const double a = angle(rng);
  const double r = mag(rng);
  return FluxDq(r * std::cos(a), r * std::sin(a));
}

CurrentDq random_current(std::mt19937& rng, double radius) {
  return random_flux(rng, radius);
}

// Central-difference gradient of the energy.
CurrentDq fd_gradient(const FluxDq& phi, const MagModel& m) {
  CurrentDq g;
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6 * std::max(1.0, phi.norm());
    FluxDq p = phi, q = phi;
    p(j) += h;
    q(j) -= h;
    g(j) = (energy(p, m) - energy(q, m)) / (2.0 * h);
  }
  return g;
}

Mat2 fd_hessian(const FluxDq& phi, const MagModel& m) {
  Mat2 hmat;
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6 * std::max(1.0, phi.norm());
    FluxDq p = phi, q = phi;
    p(j) += h;
    q(j) -= h;
    hmat.col(j) = (current_from_flux(p, m) - current_from_flux(q, m)) / (2.0 * h);
  }
  return hmat;
}

}  // namespace

TEST_CASE("rotation basics") {
  CHECK(rotation(0.0).isApprox(Mat2::Identity(), 1e-15));
  Mat2 quarter;
  quarter << 0.0, -1.0, 1.0, 0.0;
  CHECK((rotation(M_PI / 2.0) - quarter).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((rotation(M_PI / 2.0) - skew90()).cwiseAbs().maxCoeff() < 1e-15);

  const double mu = 0.3;
  const double h = 1e-5;
  const Mat2 fd = (rotation(mu + h) - rotation(mu - h)) / (2.0 * h);
  CHECK(((fd - skew90() * rotation(mu)).cwiseAbs().maxCoeff()) < 1e-8);

  // Orthogonal with unit determinant.
  const Mat2 r = rotation(1.234);
  CHECK((r * r.transpose() - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("energy values and symmetry") {
  CHECK(energy(FluxDq(0.0, 0.0), kTable) == 0.0);

  MagModel lin = kTable.unsaturated();
  CHECK(energy(FluxDq(0.1, 0.0), lin) ==
        doctest::Approx(0.01 / (2.0 * 7.9e-3)).epsilon(1e-12));

  std::mt19937 rng(11);
  for (int k = 0; k < 100; ++k) {
    const FluxDq phi = random_flux(rng, 1.5 * kTable.lambda_m);
    CHECK(energy(FluxDq(phi(0), -phi(1)), kTable) ==
          doctest::Approx(energy(phi, kTable)).epsilon(1e-14));
  }
}

TEST_CASE("current_from_flux matches the energy gradient") {
  CHECK(current_from_flux(FluxDq(0.0, 0.0), kTable) == CurrentDq(0.0, 0.0));

  const MagModel lin = kTable.unsaturated();
  const FluxDq phi(0.04, -0.02);
  const CurrentDq i_lin = current_from_flux(phi, lin);
  CHECK(i_lin(0) == doctest::Approx(phi(0) / lin.Ld).epsilon(1e-15));
  CHECK(i_lin(1) == doctest::Approx(phi(1) / lin.Lq).epsilon(1e-15));

  std::mt19937 rng(12);
  for (int k = 0; k < 100; ++k) {
    const FluxDq p = random_flux(rng, 1.5 * kTable.lambda_m);
    const CurrentDq analytic = current_from_flux(p, kTable);
    const CurrentDq fd = fd_gradient(p, kTable);
    for (int j = 0; j < 2; ++j) {
      CHECK(analytic(j) ==
            doctest::Approx(fd(j)).epsilon(1e-6).scale(
                std::max(1.0, analytic.norm())));
    }
  }
}

TEST_CASE("d-axis mirror symmetry of the magnetization map") {
  std::mt19937 rng(13);
  for (int k = 0; k < 100; ++k) {
    const FluxDq p = random_flux(rng, 1.5 * kTable.lambda_m);
    const CurrentDq i = current_from_flux(p, kTable);
    const CurrentDq i_mirr = current_from_flux(FluxDq(p(0), -p(1)), kTable);
    CHECK(i_mirr(0) == doctest::Approx(i(0)).epsilon(1e-14));
    CHECK(i_mirr(1) == doctest::Approx(-i(1)).epsilon(1e-14));
  }
}

TEST_CASE("first-order inverse: trivial cases and quadratic error order") {
  CHECK(flux_from_current_first_order(CurrentDq(0.0, 0.0), kTable) ==
        FluxDq(0.0, 0.0));

  const MagModel lin = kTable.unsaturated();
  const CurrentDq i(3.0, -2.0);
  const FluxDq lin_flux = flux_from_current_first_order(i, lin);
  CHECK(lin_flux(0) == lin.Ld * i(0));
  CHECK(lin_flux(1) == lin.Lq * i(1));

  // Round-trip error must shrink ~4x per halving of the saturation level.
  const CurrentDq rated = kIn * CurrentDq(std::cos(0.7), std::sin(0.7));
  const auto roundtrip_err = [&](double s) {
    const MagModel m = kTable.scaled_saturation(s);
    const FluxDq phi = flux_from_current_first_order(rated, m);
    return (current_from_flux(phi, m) - rated).norm();
  };
  const double e1 = roundtrip_err(1.0);
  const double e2 = roundtrip_err(0.5);
  const double e4 = roundtrip_err(0.25);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.0);
  CHECK(e2 / e4 > 3.0);
  CHECK(e2 / e4 < 5.0);
}

TEST_CASE("exact inverse round-trips to 1e-9") {
  CHECK(flux_from_current_exact(CurrentDq(0.0, 0.0), kTable) ==
        FluxDq(0.0, 0.0));

  const MagModel lin = kTable.unsaturated();
  const CurrentDq i(4.0, 1.0);
  const FluxDq phi_lin = flux_from_current_exact(i, lin);
  CHECK(phi_lin(0) == lin.Ld * i(0));
  CHECK(phi_lin(1) == lin.Lq * i(1));

  std::mt19937 rng(14);
  for (int k = 0; k < 200; ++k) {
    const CurrentDq target = random_current(rng, 1.5 * kIn);
    const FluxDq phi = flux_from_current_exact(target, kTable);
    const double err = (current_from_flux(phi, kTable) - target).norm();
    CHECK(err <= 1e-9 * std::max(1.0, target.norm()));
  }
}

TEST_CASE("hessian: values, symmetry, finite differences") {
  const Mat2 h0 = hessian(FluxDq(0.0, 0.0), kTable);
  CHECK(h0(0, 0) == doctest::Approx(1.0 / kTable.Ld).epsilon(1e-15));
  CHECK(h0(1, 1) == doctest::Approx(1.0 / kTable.Lq).epsilon(1e-15));
  CHECK(h0(0, 1) == 0.0);

  std::mt19937 rng(15);
  for (int k = 0; k < 50; ++k) {
    const FluxDq p = random_flux(rng, 1.5 * kTable.lambda_m);
    const Mat2 analytic = hessian(p, kTable);
    CHECK(analytic(0, 1) == analytic(1, 0));  // bit-for-bit
    const Mat2 fd = fd_hessian(p, kTable);
    CHECK((fd - fd.transpose()).cwiseAbs().maxCoeff() <
          1e-6 * std::max(1.0, fd.norm()));
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <
          1e-6 * std::max(1.0, analytic.norm()));
  }
}

TEST_CASE("g_matrix_of_current: values, symmetry, first-order agreement") {
  const Mat2 g0 = g_matrix_of_current(CurrentDq(0.0, 0.0), kTable);
  CHECK(g0(0, 0) == doctest::Approx(126.58).epsilon(1e-3));
  CHECK(g0(1, 1) == doctest::Approx(121.95).epsilon(1e-3));
  CHECK(g0(0, 1) == 0.0);

  std::mt19937 rng(16);
  for (int k = 0; k < 50; ++k) {
    const CurrentDq i = random_current(rng, 1.5 * kIn);
    const Mat2 g = g_matrix_of_current(i, kTable);
    CHECK(g(0, 1) == g(1, 0));
  }

  // Gap to the exact differential shrinks ~4x per halving of alpha.
  const CurrentDq i = kIn * CurrentDq(std::cos(-0.4), std::sin(-0.4));
  const auto gap = [&](double s) {
    const MagModel m = kTable.scaled_saturation(s);
    const Mat2 exact = hessian(flux_from_current_exact(i, m), m);
    return (g_matrix_of_current(i, m) - exact).norm();
  };
  const double d1 = gap(1.0);
  const double d2 = gap(0.5);
  CHECK(d1 / d2 > 3.0);
  CHECK(d1 / d2 < 5.0);
}

TEST_CASE("inductance_matrix inverts G") {
  const Mat2 l0 = inductance_matrix(CurrentDq(0.0, 0.0), kTable);
  CHECK(l0(0, 0) == doctest::Approx(kTable.Ld).epsilon(1e-14));
  CHECK(l0(1, 1) == doctest::Approx(kTable.Lq).epsilon(1e-14));

  std::mt19937 rng(17);
  for (int k = 0; k < 50; ++k) {
    const CurrentDq i = random_current(rng, 1.5 * kIn);
    const Mat2 g = g_matrix_of_current(i, kTable);
    const Mat2 l = inductance_matrix(i, kTable);
    CHECK((g * l - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(l(0, 1) == l(1, 0));
  }
}

TEST_CASE("saliency matrix: unsaturated closed form") {
  const MagModel lin = kTable.unsaturated();
  const double amp = (lin.Ld + lin.Lq) / (2.0 * lin.Ld * lin.Lq);
  // Expanding M diag(1/Ld, 1/Lq) M^T: the (0,0) entry must recover 1/Ld
  // at mu = 0, which fixes the sign of the anisotropy coefficient.
  const double k_sal = (lin.Lq - lin.Ld) / (lin.Ld + lin.Lq);

  std::mt19937 rng(18);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int k = 0; k < 100; ++k) {
    const double mu = angle(rng);
    const CurrentDq i = random_current(rng, 1.5 * kIn);
    const Mat2 s = saliency_matrix(mu, i, lin);
    Mat2 closed;
    closed << 1.0 + k_sal * std::cos(2.0 * mu), k_sal * std::sin(2.0 * mu),
        k_sal * std::sin(2.0 * mu), 1.0 - k_sal * std::cos(2.0 * mu);
    closed *= amp;
    CHECK((s - closed).cwiseAbs().maxCoeff() < 1e-12 * amp);
    // Period pi in mu.
    const Mat2 s_pi = saliency_matrix(mu + M_PI, i, lin);
    CHECK((s - s_pi).cwiseAbs().maxCoeff() < 1e-12 * amp);
  }

  // mu = 0 reduces to the differential at the exact inverse.
  const CurrentDq i(2.0, 1.0);
  const Mat2 direct = hessian(flux_from_current_exact(i, kTable), kTable);
  CHECK((saliency_matrix(0.0, i, kTable) - direct).cwiseAbs().maxCoeff() <
        1e-13 * direct.norm());
}

TEST_CASE("saliency matrix: no saliency when Ld = Lq and unsaturated") {
  MagModel iso = kTable.unsaturated();
  iso.Lq = iso.Ld;
  const CurrentDq i(1.0, -2.0);
  const Mat2 s0 = saliency_matrix(0.0, i, iso);
  for (double mu = -3.0; mu <= 3.0; mu += 0.17) {
    const Mat2 s = saliency_matrix(mu, i, iso);
    CHECK((s - s0).cwiseAbs().maxCoeff() < 1e-15 * s0.norm());
  }
}

TEST_CASE("saliency is symmetric positive definite on the admissible set") {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int k = 0; k < 50; ++k) {
    const Mat2 s = saliency_matrix(angle(rng), random_current(rng, 1.5 * kIn),
                                   kTable);
    CHECK(s(0, 1) == doctest::Approx(s(1, 0)).epsilon(1e-14));
    CHECK(s(0, 0) > 0.0);
    CHECK(s.determinant() > 0.0);
  }
}
