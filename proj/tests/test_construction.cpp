#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "ldgl/construction.hpp"

using namespace ldgl;

namespace {

ModelParams construct_params(double eps, double h_ex, int n, double d = 0.5) {
  ModelParams p = ModelParams::layered(eps, 1, 4, h_ex);
  p.mesh = {n, n, 0.125};
  p.pad = p.s / 2 + d;
  return p;
}

}  // namespace

TEST(Cutoffs, SmoothstepShape) {
  EXPECT_EQ(smoothstep(0), 0.0);
  EXPECT_EQ(smoothstep(1), 1.0);
  EXPECT_DOUBLE_EQ(smoothstep(0.5), 0.5);
  double worst = 0;
  for (int i = 1; i < 2000; ++i) {
    const double t = i / 2000.0;
    EXPECT_NEAR(smoothstep(t) + smoothstep(1 - t), 1.0, 1e-15);
    worst = std::max(worst, smoothstep_deriv(t));
    const double fd = (smoothstep(t + 1e-6) - smoothstep(t - 1e-6)) / 2e-6;
    EXPECT_NEAR(smoothstep_deriv(t), fd, 1e-6);
  }
  EXPECT_LE(worst, 2.0 + 1e-12);
}

TEST(Cutoffs, XiAndEta) {
  auto p = construct_params(0.1, 10, 21);
  const Cutoffs c = Cutoffs::for_params(p, 0.5);
  EXPECT_DOUBLE_EQ(c.R, 2 * std::sqrt(2.0));
  EXPECT_EQ(c.xi({0.5 + c.R - 1e-9, 0.5}), 1.0);
  EXPECT_EQ(c.xi({0.5, 0.5 + c.R + 1.0}), 0.0);
  for (double r = c.R; r <= c.R + 1; r += 0.01) {
    const Vec2 g = c.grad_xi({0.5 + r * 0.6, 0.5 + r * 0.8});
    EXPECT_LE(std::hypot(g.x, g.y), 2.0 + 1e-12);
  }
  for (double t = 0; t < 2; t += 0.013) {
    EXPECT_NEAR(c.eta(0.5 + t), c.eta(0.5 - t), 1e-14);
    EXPECT_LE(std::abs(c.eta_prime(0.5 + t)), 2 / c.d + 1e-12);
  }
  EXPECT_EQ(c.eta(-p.s / 2), 1.0);
  EXPECT_EQ(c.eta(1 + p.s / 2 + 0.5), 0.0);
}

TEST(SelectTranslation, SingleCandidate) {
  const Vec2 only{0.1, -0.2};
  auto r = select_translation({only}, [](Vec2) { return 3.0; });
  EXPECT_EQ(r.x0, only);
  EXPECT_EQ(r.score, 3.0);
}

TEST(SelectTranslation, TiesGoLexicographic) {
  std::vector<Vec2> c{{0.3, 0.1}, {0.1, 0.5}, {0.1, 0.2}, {0.2, -1}};
  auto r = select_translation(c, [](Vec2) { return 1.0; });
  EXPECT_EQ(r.x0, (Vec2{0.1, 0.2}));
  auto r2 = select_translation(c, [](Vec2 x) { return x.x == 0.3 ? 0.0 : 1.0; });
  EXPECT_EQ(r2.x0, (Vec2{0.3, 0.1}));
  EXPECT_THROW(select_translation({}, [](Vec2) { return 0.0; }), std::invalid_argument);
}

TEST(SelectTranslation, GridBeatsMean) {
  auto p = construct_params(0.1, 12, 21);
  LatticeSpec spec(p.h_ex);
  const auto cands = translation_candidates(spec, 5);
  ASSERT_EQ(cands.size(), 25u);
  for (auto c : cands) EXPECT_TRUE(spec.in_translation_cell(c));
  auto r = select_translation(cands, p);
  double mean = 0;
  for (double v : r.scores) mean += v / r.scores.size();
  EXPECT_LE(r.score, mean);
  EXPECT_EQ(r.score, *std::min_element(r.scores.begin(), r.scores.end()));
}

TEST(Construction, RejectsBadInputs) {
  auto coarse = construct_params(0.1, 10, 11);
  EXPECT_THROW(assemble_test_configuration(coarse), ParamError);
  auto p = construct_params(0.1, 10, 21);
  ConstructionOptions o;
  o.d = 2.0;
  EXPECT_THROW(assemble_test_configuration(p, o), ParamError);
}

TEST(Construction, SplitSymmetryAndZeroJosephson) {
  auto p = construct_params(0.1, 10, 21);
  ConstructionOptions o;
  o.d = 0.5;
  o.candidates = 3;
  auto r = assemble_test_configuration(p, o);
  EXPECT_NEAR(r.I2, r.I3, 1e-10 * r.I2);
  EXPECT_GT(r.I2, 0);
  EXPECT_EQ(r.discrete.josephson, 0.0);
  EXPECT_NEAR(r.total, r.I1 + r.I2 + r.I3, 1e-12 * r.total);
  EXPECT_NEAR(r.M_eps, 0.5 * 10 * std::log(1 / (0.1 * std::sqrt(10.0))), 1e-12);
  EXPECT_GT(r.truncation_radius, r.lattice.a);
  EXPECT_TRUE(r.lattice.in_translation_cell(r.lattice.x0));
  // layers are identical and A3 vanishes
  for (int n = 1; n < r.config.layers(); ++n) EXPECT_TRUE(r.config.u[n] == r.config.u[0]);
  for (double v : r.config.A.a3.data()) EXPECT_EQ(v, 0.0);
  // |v| = rho
  for (int j = 0; j < 21; ++j)
    for (int i = 0; i < 21; ++i) EXPECT_NEAR(std::abs(r.config.u[0](i, j)), r.rho(i, j), 1e-15);
  // the materialized phase reproduces the gauge-invariant kinetic term up to discretization
  EXPECT_NEAR(r.kinetic_discrete, r.omega.kinetic, 0.25 * r.omega.kinetic);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("I2").get<double>(), r.I2);
}

TEST(Construction, CurlMatchesLatticeField) {
  // curl of B on D's plaquettes equals the cell average of h_eps up to O(h^2)
  auto err = [](int n) {
    auto p = construct_params(0.1, 10, n);
    ConstructionOptions o;
    o.d = 0.5;
    o.x0 = Vec2{0.13, -0.21};
    auto r = assemble_test_configuration(p, o);
    const auto& d = *r.dom;
    const auto c = discrete_curl(r.config.A);
    const int k = d.layer_k(2);
    double num = 0, den = 0;
    for (int j = 1; j < n - 2; ++j)
      for (int i = 1; i < n - 2; ++i) {
        // h_eps is log-singular at the cores; compare on the smooth part
        if (r.lattice.nearest_distance({(i + 0.5) * d.hx(), (j + 0.5) * d.hy()}) < 0.2) continue;
        const double want = r.H_cell(i, j) + p.h_ex;
        const double got = c.c3(d.px() + i, d.py() + j, k);
        num += (got - want) * (got - want);
        den += want * want;
      }
    return std::sqrt(num / den);
  };
  const double e1 = err(21), e2 = err(41);
  EXPECT_LT(e1, 0.02);
  EXPECT_LT(e2, e1 / 3);
}

TEST(Construction, SingleVortexWinding) {
  const double h = 2 * std::numbers::pi / (1.2 * 1.2);  // cell 1.2: one lattice point in Omega
  auto p = construct_params(0.1, h, 21);
  ConstructionOptions o;
  o.d = 0.5;
  o.x0 = Vec2{0.5, 0.5};
  auto r = assemble_test_configuration(p, o);
  ASSERT_EQ(r.lattice.points_in(1, 1).size(), 1u);
  auto ph = reconstruct_phase(r);
  ASSERT_EQ(static_cast<int>(ph.size()), 5);
  EXPECT_NEAR(loop_winding(ph[0], 5, 5, 15, 15), 1.0, 1e-6);
  EXPECT_NEAR(loop_winding(ph[0], 0, 0, 20, 20), 1.0, 1e-6);
  EXPECT_NEAR(loop_winding(ph[0], 0, 0, 6, 6), 0.0, 1e-6);
}

TEST(Construction, NoVortexConstantPhase) {
  auto p = construct_params(0.1, 0.01, 21);
  ConstructionOptions o;
  o.d = 0.5;
  auto r = assemble_test_configuration(p, o);
  ASSERT_EQ(r.lattice.points_in(1, 1).size(), 0u);
  auto ph = reconstruct_phase(r);
  EXPECT_NEAR(loop_winding(ph[0], 0, 0, 20, 20), 0.0, 1e-6);
  const auto [lo, hi] = std::minmax_element(r.phase.data().begin(), r.phase.data().end());
  EXPECT_LT(*hi - *lo, 0.05);
}

TEST(Construction, KVorticesAdditive) {
  // cell 0.5 shifted to 0.25: cores at 0.25 and 0.75 in each direction
  auto p = construct_params(0.1, 2 * std::numbers::pi * 4, 21);
  ConstructionOptions o;
  o.d = 0.5;
  o.x0 = Vec2{0.25, 0.25};
  auto r = assemble_test_configuration(p, o);
  auto ph = reconstruct_phase(r)[0];
  EXPECT_NEAR(loop_winding(ph, 0, 0, 20, 20), 4.0, 1e-6);
  EXPECT_NEAR(loop_winding(ph, 0, 0, 10, 20), 2.0, 1e-6);
  EXPECT_NEAR(loop_winding(ph, 2, 2, 8, 8), 1.0, 1e-6);
  EXPECT_NEAR(loop_winding(ph, 0, 0, 20, 10) + loop_winding(ph, 0, 10, 10, 20), 3.0, 1e-6);
}

TEST(Construction, CoreNearBoundaryRejected) {
  auto p = construct_params(0.1, 2 * std::numbers::pi * 4, 21);
  ConstructionOptions o;
  o.d = 0.5;
  o.x0 = Vec2{0.03, 0.25};
  auto r = assemble_test_configuration(p, o);
  EXPECT_THROW(reconstruct_phase(r), std::domain_error);
}
