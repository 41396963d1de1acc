#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "ldgl/potentials.hpp"
#include "ldgl/random.hpp"

using namespace ldgl;
using test::rel;

namespace {

CellField2 smooth_density(int n, double L = 1.0) {
  Rng r(21);
  SmoothField f(r, 3, 1.0, 2 * std::numbers::pi);
  CellField2 g{0, 0, L / n, L / n, Array2<double>(n, n)};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 c = g.center(i, j);
      g.v(i, j) = 1.0 + f(c.x, c.y);
    }
  return g;
}

double brute_cell(Vec3 t, double x1, double x2, double y1, double y2, double zk, int n) {
  Accumulator a;
  const double hx = (x2 - x1) / n, hy = (y2 - y1) / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = x1 + (i + 0.5) * hx - t.x, y = y1 + (j + 0.5) * hy - t.y, z = zk - t.z;
      a += hx * hy / std::sqrt(x * x + y * y + z * z);
    }
  return SingleLayerPotential::c * a.value();
}

}  // namespace

TEST(SingleLayer, ZeroDensity) {
  CellField2 g{0, 0, 0.1, 0.1, Array2<double>(10, 10)};
  SingleLayerPotential S(g, 0.5);
  EXPECT_EQ(S.value({0.3, 0.3, 0.7}), 0.0);
  EXPECT_EQ(S.value({0.3, 0.3, 0.5}, true), 0.0);
}

TEST(SingleLayer, CellIntegralMatchesBruteForce) {
  CellField2 g{0.2, 0.1, 0.1, 0.05, Array2<double>(1, 1, 1.0)};
  SingleLayerPotential S(g, 0.0);
  for (Vec3 t : {Vec3{0.25, 0.12, 0.03}, Vec3{0.5, 0.5, -0.2}, Vec3{0.21, 0.149, 0.001}, Vec3{0.0, 0.0, 0.01}})
    EXPECT_NEAR(S.value(t), brute_cell(t, 0.2, 0.3, 0.1, 0.15, 0.0, 2000), 1e-6 * std::abs(S.value(t))) << t.x;
  // trace inside the cell: the kernel is integrable, the midpoint sum converges at first order
  const Vec3 in{0.23, 0.12, 0.0};
  EXPECT_NEAR(S.value(in, true), brute_cell(in, 0.2, 0.3, 0.1, 0.15, 0.0, 1999), 2e-3 * std::abs(S.value(in, true)));
  // centre of a square cell of side h: trace = c * 4 h asinh(1)
  CellField2 sq{-0.5, -0.5, 1.0, 1.0, Array2<double>(1, 1, 1.0)};
  EXPECT_NEAR(SingleLayerPotential(sq, 0).value({0, 0, 0}, true), SingleLayerPotential::c * 4 * std::asinh(1.0), 1e-15);
}

TEST(SingleLayer, RejectsOnLayerWithoutFlag) {
  auto g = smooth_density(8);
  SingleLayerPotential S(g, 0.25);
  EXPECT_THROW(S.value({0.5, 0.5, 0.25}), std::domain_error);
  EXPECT_NO_THROW(S.value({0.5, 0.5, 0.25}, true));
}

TEST(SingleLayer, MirrorSymmetryExact) {
  auto g = smooth_density(12);
  SingleLayerPotential S(g, 0.5);
  for (double d : {0.01, 0.125, 0.5, 3.0})
    for (Vec2 p : {Vec2{0.3, 0.4}, Vec2{-0.2, 1.1}, Vec2{0.5, 0.5}})
      EXPECT_EQ(S.value({p.x, p.y, 0.5 + d}), S.value({p.x, p.y, 0.5 - d}));
}

TEST(SingleLayer, FarFieldMonopole) {
  auto g = smooth_density(16);
  SingleLayerPotential S(g, 0.0);
  const double R = 10 * std::sqrt(2.0);
  for (Vec3 dir : {Vec3{1, 0, 0}, Vec3{0, 0, 1}, Vec3{0.6, 0, -0.8}}) {
    const Vec3 x{0.5 + R * dir.x, 0.5 + R * dir.y, R * dir.z};
    const double want = SingleLayerPotential::c * S.mass()[0] / R;
    EXPECT_NEAR(S.value(x, x.z == 0), want, 0.02 * std::abs(want));
  }
}

TEST(SingleLayer, HarmonicOffLayer) {
  // 7-point Laplacian residual at points >= 2 cells from the plane, stencil step h
  auto resid = [](int n) {
    auto g = smooth_density(n);
    SingleLayerPotential S(g, 0.0);
    const double h = 1.0 / n;
    double worst = 0;
    for (double z : {0.25, 0.375})
      for (double x : {0.25, 0.5, 0.75})
        for (double y : {0.25, 0.625}) {
          const double lap = (S.value({x + h, y, z}) + S.value({x - h, y, z}) + S.value({x, y + h, z}) +
                              S.value({x, y - h, z}) + S.value({x, y, z + h}) + S.value({x, y, z - h}) -
                              6 * S.value({x, y, z})) /
                             (h * h);
          worst = std::max(worst, std::abs(lap));
        }
    return worst / cell_l2(g);
  };
  const double e1 = resid(16), e2 = resid(32);
  EXPECT_GE(e1 / e2, 3.5);
  EXPECT_LE(e1 / e2, 4.5);
}

TEST(SingleLayer, TraceContinuity) {
  const int n = 16;
  auto g = smooth_density(n);
  SingleLayerPotential S(g, 0.2);
  const double h = 1.0 / n;
  for (Vec2 p : {Vec2{0.5, 0.5}, Vec2{0.31, 0.77}}) {
    const double t = S.value({p.x, p.y, 0.2}, true);
    double prev = INFINITY, e1 = 0;
    for (double d : {4 * h, 2 * h, h, h / 2}) {
      const double e = std::abs(S.value({p.x, p.y, 0.2 + d}) - t);
      EXPECT_LT(e, prev) << d;
      if (d == h) e1 = e;
      prev = e;
    }
    // the normal derivative jumps by g/2, so the gap closes linearly in delta
    EXPECT_LT(prev, 0.6 * e1);
  }
}

TEST(SingleLayer, GradientMatchesDifferences) {
  auto g = smooth_density(8);
  SingleLayerPotential S(g, 0.0);
  const double d = 1e-5;
  for (Vec3 x : {Vec3{0.3, 0.6, 0.1}, Vec3{1.4, -0.2, -0.3}}) {
    const Vec3 gr = S.grad(x);
    const double gx = (S.value({x.x + d, x.y, x.z}) - S.value({x.x - d, x.y, x.z})) / (2 * d);
    const double gy = (S.value({x.x, x.y + d, x.z}) - S.value({x.x, x.y - d, x.z})) / (2 * d);
    const double gz = (S.value({x.x, x.y, x.z + d}) - S.value({x.x, x.y, x.z - d})) / (2 * d);
    const double sc = std::abs(gx) + std::abs(gy) + std::abs(gz);
    EXPECT_NEAR(gr.x, gx, 1e-6 * sc);
    EXPECT_NEAR(gr.y, gy, 1e-6 * sc);
    EXPECT_NEAR(gr.z, gz, 1e-6 * sc);
  }
}

TEST(Supercurrent, ZeroOrderParameter) {
  auto d = build_domain(test::small_params());
  LayeredConfiguration st(d, 0.0);
  Rng r(1);
  perturb_potential(st.A, *d, r, 0.5);
  const auto h = supercurrent_density(st);
  for (int k = 0; k < st.layers(); ++k) {
    for (double v : h.h1[k].v.data()) EXPECT_EQ(v, 0.0);
    for (double v : h.h2[k].v.data()) EXPECT_EQ(v, 0.0);
  }
  for (const auto& j : h.j3)
    for (double v : j.data()) EXPECT_EQ(v, 0.0);
}

TEST(Supercurrent, ConstantPotential) {
  auto p = test::small_params();
  p.h_ex = 0;
  auto d = build_domain(p);
  LayeredConfiguration st(d, 1.0);
  const double c = 0.7;
  std::fill(st.A.a1.data().begin(), st.A.a1.data().end(), c);
  const auto h = supercurrent_density(st);
  const double hx = d->hx();
  for (int k = 0; k < st.layers(); ++k)
    for (int j = 0; j < d->ny() - 1; ++j)
      for (int i = 0; i < d->nx() - 1; ++i) {
        // discrete value s sin(h c)/h -> s c
        EXPECT_NEAR(h.h1[k].v(i, j), p.s * std::sin(hx * c) / hx, 1e-14);
        EXPECT_NEAR(h.h1[k].v(i, j), p.s * c, p.s * c * (hx * c) * (hx * c) / 6 * 1.01);
        EXPECT_NEAR(h.h2[k].v(i, j), 0.0, 1e-15);
      }
}

TEST(Supercurrent, GaugeInvariantAndBounded) {
  auto d = build_domain(test::small_params(13));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto st = random_smooth_layered(d, seed);
    const auto a = supercurrent_density(st);
    const auto b = supercurrent_density(apply_gauge(st, random_gauge(*d, seed + 100)));
    for (int k = 0; k < st.layers(); ++k)
      for (size_t q = 0; q < a.h1[k].v.size(); ++q) {
        EXPECT_NEAR(a.h1[k].v.data()[q], b.h1[k].v.data()[q], 1e-12 * (1 + std::abs(a.h1[k].v.data()[q])));
        EXPECT_NEAR(a.h2[k].v.data()[q], b.h2[k].v.data()[q], 1e-12 * (1 + std::abs(a.h2[k].v.data()[q])));
      }
    for (size_t n = 0; n < a.j3.size(); ++n)
      for (size_t q = 0; q < a.j3[n].size(); ++q) EXPECT_NEAR(a.j3[n].data()[q], b.j3[n].data()[q], 1e-12);
    // |h| <= s |D u| on every link when |u| <= 1
    for (int k = 0; k < st.layers(); ++k) {
      const auto L = layer_links(st.A, *d, d->layer_k(k));
      const auto c = link_currents(st.u[k], L, d->s());
      const auto D = covariant_gradient(st.u[k], L);
      for (size_t q = 0; q < c.x.size(); ++q) EXPECT_LE(std::abs(c.x.data()[q]), d->s() * std::abs(D.dx.data()[q]) + 1e-15);
      for (size_t q = 0; q < c.y.size(); ++q) EXPECT_LE(std::abs(c.y.data()[q]), d->s() * std::abs(D.dy.data()[q]) + 1e-15);
    }
  }
}

TEST(Nontangential, ConstantAndPeak) {
  ConeSpec cone;
  cone.R = 0.2;
  const Grid2 g{0, 0, 0.1, 0.1, 11, 11};
  const std::array<double, 6> box{-1, 2, -1, 2, -1, 1};
  auto u = nontangential_maximal([](const Vec3&) { return -2.5; }, g, 0.0, cone, 0, box);
  for (double v : u.data()) EXPECT_EQ(v, 2.5);
  auto f = [](const Vec3& x) { return 1 / std::sqrt((x.x - 0.4) * (x.x - 0.4) + (x.y - 0.6) * (x.y - 0.6) + x.z * x.z); };
  auto m = nontangential_maximal(f, g, 0.0, cone, 0, box);
  const auto it = std::max_element(m.data().begin(), m.data().end());
  const size_t at = static_cast<size_t>(it - m.data().begin());
  EXPECT_EQ(at % 11, 4u);
  EXPECT_EQ(at / 11, 6u);
  auto m1 = nontangential_maximal(f, g, 0.0, cone, 1, box);
  for (size_t q = 0; q < m.size(); ++q) EXPECT_GE(m1.data()[q], m.data()[q]);
  cone.R = 2;
  EXPECT_THROW(nontangential_maximal(f, g, 0.0, cone, 0, box), std::domain_error);
  cone.theta = 2;
  EXPECT_THROW(cone.samples(), std::invalid_argument);
}

TEST(Nontangential, SampleSetsNest) {
  ConeSpec cone;
  const auto a = cone.samples(0), b = cone.samples(1);
  EXPECT_EQ(a.size(), 2u * 16 * (1 + 3 * 8));
  for (const Vec3& p : a) {
    bool found = false;
    for (const Vec3& q : b)
      if (std::abs(p.x - q.x) + std::abs(p.y - q.y) + std::abs(p.z - q.z) < 1e-14) found = true;
    EXPECT_TRUE(found);
    const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    EXPECT_LE(r, cone.R + 1e-15);
    EXPECT_LT(std::hypot(p.x, p.y), r * std::sin(cone.theta));
  }
}

TEST(Nontangential, LayerPotentialBoundStable) {
  // ||(S g)*||_L2 / ||g||_L2 with R = 1 changes little under refinement
  auto ratio = [](int n) {
    auto g = smooth_density(n);
    SingleLayerPotential S(g, 0.0);
    ConeSpec cone;
    const Grid2 nodes{0, 0, 1.0 / 8, 1.0 / 8, 9, 9};
    auto u = nontangential_maximal([&](const Vec3& x) { return S.value(x); }, nodes, 0.0, cone, 0,
                                   {-1.5, 2.5, -1.5, 2.5, -1.5, 1.5});
    return node_l2(u, 1.0 / 8, 1.0 / 8) / cell_l2(g);
  };
  const double c1 = ratio(8), c2 = ratio(16);
  EXPECT_GT(c1, 0);
  EXPECT_LT(rel(c1, c2), 0.05);
}

TEST(Representation, NormalStateVanishes) {
  auto d = build_domain(test::small_params());
  LayeredConfiguration st(d, 0.0);
  for (double r : representation_residual(st)) EXPECT_LT(r, 1e-12);
}

TEST(TraceDeviation, BackgroundIsZero) {
  auto d = build_domain(test::small_params());
  LayeredConfiguration st(d, 1.0);
  EXPECT_EQ(trace_deviation(st), 0.0);
  // any x3-independent in-plane potential
  Rng r(5);
  SmoothField f(r, 3, 1.0);
  for (int k = 0; k < d->NZ(); ++k)
    for (int j = 0; j < d->NY(); ++j)
      for (int i = 0; i < d->NX() - 1; ++i) st.A.a1(i, j, k) = f(d->x(i), d->y(j));
  EXPECT_EQ(trace_deviation(st), 0.0);
}

TEST(TraceDeviation, LinearShearClosedForm) {
  // a2 += x3 sin(pi x1): curl differs by (x3 - ns) pi cos(pi x1); value N s^3 pi^2 / 12
  auto p = test::small_params(65, 0.125, 0.05);
  auto d = build_domain(p);
  LayeredConfiguration st(d, 1.0);
  for (int k = d->k_bottom(); k <= d->k_top(); ++k)
    for (int j = 0; j < d->NY() - 1; ++j)
      for (int i = 0; i < d->NX(); ++i) st.A.a2(i, j, k) += d->z(k) * std::sin(std::numbers::pi * d->x(i));
  const double want = p.n_layers * std::pow(p.s, 3) * std::numbers::pi * std::numbers::pi / 12;
  EXPECT_NEAR(trace_deviation(st), want, 1e-3 * want);
}
