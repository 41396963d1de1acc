#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "ldgl/energy.hpp"
#include "ldgl/random.hpp"

using namespace ldgl;
using ldgl::test::rel;
using ldgl::test::small_params;

TEST(Energy, NormalStateClosedForm) {
  auto d = build_domain(small_params(9));
  LayeredConfiguration st(d, 0.0);
  auto e = ld_energy(st);
  EXPECT_LT(rel(e.total, 31.25), 1e-12);
  EXPECT_EQ(e.layer_kinetic, 0.0);
  EXPECT_LT(e.magnetic(), 1e-20);
  ContinuumConfiguration cs(d, 0.0);
  auto ea = agl_energy(cs);
  EXPECT_LT(rel(ea.total, 25.0), 1e-12);
}

TEST(Energy, PerfectSuperconductor) {
  auto p = small_params(9);
  p.h_ex = 0;
  auto d = build_domain(p);
  LayeredConfiguration st(d, 1.0);
  st.A = Potential3D::zero(*d);
  EXPECT_EQ(ld_energy(st).total, 0.0);
  ContinuumConfiguration cs(d, 1.0);
  cs.A = Potential3D::zero(*d);
  EXPECT_EQ(agl_energy(cs).total, 0.0);
}

TEST(Energy, JosephsonVanishesForTransportedLayers) {
  auto d = build_domain(small_params(9));
  auto st = random_smooth_layered(d, 21);
  for (int n = 0; n + 1 < st.layers(); ++n) {
    auto ph = vertical_link_phase(st.A, *d, n);
    for (int j = 0; j < d->ny(); ++j)
      for (int i = 0; i < d->nx(); ++i) st.u[n + 1](i, j) = st.u[n](i, j) * std::polar(1.0, ph(i, j));
  }
  EXPECT_EQ(ld_energy(st).josephson, 0.0);
  // equal layers, A3 = 0
  auto eq = random_smooth_layered(d, 22);
  eq.A = Potential3D::background(*d);
  for (int n = 1; n < eq.layers(); ++n) eq.u[n] = eq.u[0];
  EXPECT_EQ(ld_energy(eq).josephson, 0.0);
}

TEST(Energy, BreakdownSumsAndNonnegative) {
  auto d = build_domain(small_params(9));
  auto st = random_smooth_layered(d, 4);
  auto e = ld_energy(st);
  double s = 0;
  for (size_t i = 0; i < 6; ++i) {
    EXPECT_GE(e.values()[i], 0.0);
    s += e.values()[i];
  }
  EXPECT_LT(rel(s, e.total), 1e-12);
}

TEST(Energy, MagneticTermsReassembleBoxIntegral) {
  auto d = build_domain(small_params(9));
  auto st = random_smooth_layered(d, 8);
  auto e = ld_energy(st);
  // direct box integral with half weights on the box faces
  auto c = discrete_curl(st.A);
  const double h = st.A.h_ex, v = d->cell_volume();
  Accumulator a;
  for (int k = 0; k < d->NZ(); ++k)
    for (int j = 0; j < d->NY() - 1; ++j)
      for (int i = 0; i < d->NX() - 1; ++i) {
        const double w = (k == 0 || k == d->NZ() - 1) ? 0.5 : 1.0;
        a += 0.5 * v * w * std::pow(c.c3(i, j, k) - h, 2);
      }
  for (int k = 0; k < d->NZ() - 1; ++k)
    for (int j = 0; j < d->NY() - 1; ++j)
      for (int i = 0; i < d->NX(); ++i) {
        const double w = (i == 0 || i == d->NX() - 1) ? 0.5 : 1.0;
        a += 0.5 * v * w * std::pow(c.c1(i, j, k), 2);
      }
  for (int k = 0; k < d->NZ() - 1; ++k)
    for (int j = 0; j < d->NY(); ++j)
      for (int i = 0; i < d->NX() - 1; ++i) {
        const double w = (j == 0 || j == d->NY() - 1) ? 0.5 : 1.0;
        a += 0.5 * v * w * std::pow(c.c2(i, j, k), 2);
      }
  EXPECT_LT(rel(e.magnetic(), a.value()), 1e-12);
}

TEST(Energy, GaugeInvarianceEveryTerm) {
  auto d = build_domain(small_params(9));
  auto st = random_smooth_layered(d, 31);
  auto cs = random_smooth_continuum(d, 32);
  auto e0 = ld_energy(st);
  auto a0 = agl_energy(cs);
  for (int r = 0; r < 5; ++r) {
    auto g = random_gauge(*d, 100 + r);
    auto e1 = ld_energy(apply_gauge(st, g));
    auto a1 = agl_energy(apply_gauge(cs, g));
    for (size_t i = 0; i < 7; ++i) {
      EXPECT_LT(rel(e0.values()[i], e1.values()[i]), 1e-12) << EnergyBreakdown::names[i];
      EXPECT_LT(rel(a0.values()[i], a1.values()[i]), 1e-12) << EnergyBreakdown::names[i];
    }
  }
}

TEST(Energy, AGLLambdaScaling) {
  auto p = small_params(9);
  auto d1 = build_domain(p);
  p.lambda = 2;
  auto d2 = build_domain(p);
  auto make = [](DomainPtr d) {
    ContinuumConfiguration c(d);
    c.A = Potential3D::zero(*d);
    for (int k = 0; k < c.nz(); ++k)
      for (int j = 0; j < d->ny(); ++j)
        for (int i = 0; i < d->nx(); ++i) c.psi(i, j, k) = std::polar(1.0, d->z(d->k_bottom() + k));
    return c;
  };
  const double v1 = agl_energy(make(d1)).josephson, v2 = agl_energy(make(d2)).josephson;
  EXPECT_GT(v1, 0.1);
  EXPECT_LT(rel(v1 / v2, 4.0), 1e-12);
}

TEST(Energy, Gl2dModes) {
  auto p = small_params(9);
  auto d = build_domain(p);
  auto bg = Potential3D::background(*d);
  Array2<cplx> u0(d->nx(), d->ny(), 0.0);
  const int k = d->layer_k(1);
  auto fr = plane_field(bg, *d, k, GLMode::restricted_F);
  EXPECT_LT(rel(gl2d_energy(u0, fr, GLMode::restricted_F, 0.1), 25.0), 1e-12);
  auto st = random_smooth_layered(d, 2);
  st.A = Potential3D::background(*d);
  // perturb only Omega-interior links so the exterior stays at background
  for (int j = d->py() + 1; j < d->py() + d->ny() - 2; ++j)
    for (int i = d->px() + 1; i < d->px() + d->nx() - 2; ++i) st.A.a1(i, j, k) += 0.3 * std::sin(i + 2.0 * j);
  auto f1 = plane_field(st.A, *d, k, GLMode::restricted_F);
  auto f2 = plane_field(st.A, *d, k, GLMode::full_plane_GL);
  const double ef = gl2d_energy(st.u[1], f1, GLMode::restricted_F, 0.1);
  const double eg = gl2d_energy(st.u[1], f2, GLMode::full_plane_GL, 0.1);
  EXPECT_LT(rel(ef, eg), 1e-12);
  EXPECT_THROW(gl2d_energy(st.u[1], f2, GLMode::restricted_F, 0.1), ShapeError);
  p.h_ex = 0;
  auto d0 = build_domain(p);
  Array2<cplx> u1(d0->nx(), d0->ny(), 1.0);
  auto z = plane_field(Potential3D::zero(*d0), *d0, d0->layer_k(0), GLMode::restricted_F);
  z.h_ex = 0;
  EXPECT_EQ(gl2d_energy(u1, z, GLMode::restricted_F, 0.1), 0.0);
}

static double smooth_energy(int nx) {
  auto p = small_params(nx);
  auto d = build_domain(p);
  LayeredConfiguration st(d);
  for (auto& l : st.u)
    for (int j = 0; j < d->ny(); ++j)
      for (int i = 0; i < d->nx(); ++i) l(i, j) = std::polar(1.0, d->x(d->px() + i));
  return ld_energy(st).total;
}

TEST(Energy, SecondOrderRefinement) {
  const double e1 = smooth_energy(9), e2 = smooth_energy(17), e3 = smooth_energy(33);
  const double r = (e1 - e2) / (e2 - e3);
  EXPECT_GT(r, 3.5);
  EXPECT_LT(r, 4.5);
}

// Finite differences are exercised more fully through gradient_check in the
// minimize tests; these cover every link kind and node on a tiny grid.
TEST(Energy, LDGradientMatchesFiniteDifferences) {
  auto d = build_domain(small_params(7, 0.125, 0.2));
  auto st = random_smooth_layered(d, 77);
  auto g = ld_gradient(st);
  double worst = 0;
  auto E = [&]() { return ld_energy(st).precise_total; };
  auto check = [&](double& x, double an) {
    const double x0 = x, h = 1e-6;
    x = x0 + h;
    const long double ep = E();
    x = x0 - h;
    const long double em = E();
    x = x0;
    const double fd = static_cast<double>((ep - em) / (2 * h));
    const double r = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-10});
    worst = std::max(worst, r);
  };
  for (int n = 0; n < st.layers(); ++n)
    for (int j = 0; j < d->ny(); j += 2)
      for (int i = 0; i < d->nx(); i += 3) {
        cplx& z = st.u[n](i, j);
        double* p = reinterpret_cast<double*>(&z);
        check(p[0], g.du[n](i, j).real());
        check(p[1], g.du[n](i, j).imag());
      }
  for (size_t q = 0; q < st.A.a1.size(); q += 37) check(st.A.a1.data()[q], g.dA.a1.data()[q]);
  for (size_t q = 0; q < st.A.a2.size(); q += 37) check(st.A.a2.data()[q], g.dA.a2.data()[q]);
  for (size_t q = 0; q < st.A.a3.size(); q += 37) check(st.A.a3.data()[q], g.dA.a3.data()[q]);
  EXPECT_LT(worst, 1e-6);
}

TEST(Energy, AGLGradientMatchesFiniteDifferences) {
  auto d = build_domain(small_params(7, 0.125, 0.2));
  auto st = random_smooth_continuum(d, 78);
  auto g = agl_gradient(st);
  double worst = 0;
  auto E = [&]() { return agl_energy(st).precise_total; };
  auto check = [&](double& x, double an) {
    const double x0 = x, h = 1e-6;
    x = x0 + h;
    const long double ep = E();
    x = x0 - h;
    const long double em = E();
    x = x0;
    const double fd = static_cast<double>((ep - em) / (2 * h));
    worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-10}));
  };
  for (size_t q = 0; q < st.psi.size(); q += 13) {
    double* p = reinterpret_cast<double*>(&st.psi.data()[q]);
    check(p[0], g.dpsi.data()[q].real());
    check(p[1], g.dpsi.data()[q].imag());
  }
  for (size_t q = 0; q < st.A.a1.size(); q += 37) check(st.A.a1.data()[q], g.dA.a1.data()[q]);
  for (size_t q = 0; q < st.A.a2.size(); q += 37) check(st.A.a2.data()[q], g.dA.a2.data()[q]);
  for (size_t q = 0; q < st.A.a3.size(); q += 37) check(st.A.a3.data()[q], g.dA.a3.data()[q]);
  EXPECT_LT(worst, 1e-6);
}

TEST(Energy, StationaryStatesHaveZeroGradient) {
  auto p = small_params(9);
  p.h_ex = 0;
  auto d = build_domain(p);
  LayeredConfiguration st(d, 1.0);
  st.A = Potential3D::zero(*d);
  auto g = ld_gradient(st);
  for (auto& l : g.du)
    for (auto z : l.data()) EXPECT_EQ(z, cplx(0));
  for (double v : g.dA.a1.data()) EXPECT_EQ(v, 0.0);
  auto dn = build_domain(small_params(9));
  LayeredConfiguration nrm(dn, 0.0);
  auto gn = ld_gradient(nrm);
  for (auto& l : gn.du)
    for (auto z : l.data()) EXPECT_EQ(z, cplx(0));
  ContinuumConfiguration cn(dn, 0.0);
  auto ga = agl_gradient(cn);
  for (auto z : ga.dpsi.data()) EXPECT_EQ(z, cplx(0));
}

TEST(Energy, JsonAndCsv) {
  auto d = build_domain(small_params(9));
  auto e = ld_energy(random_smooth_layered(d, 1));
  auto back = EnergyBreakdown::from_json(nlohmann::json::parse(e.to_json().dump()));
  EXPECT_EQ(back.total, e.total);
  EXPECT_EQ(EnergyBreakdown::csv_header(),
            "layer_kinetic,gl_potential,josephson,magnetic_in_D,magnetic_exterior,magnetic_mixed_in_D,total");
  const std::string row = e.csv_row();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 6);
}
