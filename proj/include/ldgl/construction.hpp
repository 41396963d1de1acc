#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "ldgl/domain.hpp"
#include "ldgl/energy.hpp"
#include "ldgl/fields.hpp"
#include "ldgl/lattice.hpp"
#include "ldgl/linalg.hpp"
#include "ldgl/newtonian.hpp"

namespace ldgl {

/// C-infinity step 1/(1 + exp(1/t - 1/(1-t))): 0 for t <= 0, 1 for t >= 1.
/// Its steepest slope is 2, at t = 1/2.
inline double smoothstep(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  const double g = 1 / t - 1 / (1 - t);
  return g > 0 ? std::exp(-g) / (1 + std::exp(-g)) : 1 / (1 + std::exp(g));
}

inline double smoothstep_deriv(double t) {
  if (t <= 0 || t >= 1) return 0;
  const double S = smoothstep(t);
  return S * (1 - S) * (1 / (t * t) + 1 / ((1 - t) * (1 - t)));
}

/// The two cutoffs: xi = 1 on the disk B_R about c and 0 off B_{R+1};
/// eta = 1 on [-s/2, L+s/2] and 0 beyond a further distance d, symmetric about L/2.
struct Cutoffs {
  Vec2 c;
  double R = 1, s = 0.25, L = 1, d = 1;

  static Cutoffs for_params(const ModelParams& p, double d) {
    return {{0.5 * p.wx, 0.5 * p.wy}, std::max(2 * p.diam_omega(), 1.0), p.s, p.height, d};
  }

  double xi(Vec2 x) const { return 1 - smoothstep(std::hypot(x.x - c.x, x.y - c.y) - R); }
  Vec2 grad_xi(Vec2 x) const {
    const double dx = x.x - c.x, dy = x.y - c.y, r = std::hypot(dx, dy);
    if (r <= R || r >= R + 1) return {0, 0};
    const double g = -smoothstep_deriv(r - R) / r;
    return {g * dx, g * dy};
  }
  double eta(double z) const {
    const double lo = -s / 2, hi = L + s / 2;
    if (z < lo) return 1 - smoothstep((lo - z) / d);
    if (z > hi) return 1 - smoothstep((z - hi) / d);
    return 1;
  }
  double eta_prime(double z) const {
    const double lo = -s / 2, hi = L + s / 2;
    if (z < lo) return smoothstep_deriv((lo - z) / d) / d;
    if (z > hi) return -smoothstep_deriv((z - hi) / d) / d;
    return 0;
  }
};

/// x0 candidates (i + 1/2) a/n - a/2 in each direction, x-fastest.
inline std::vector<Vec2> translation_candidates(const LatticeSpec& spec, int n) {
  if (n < 1) throw std::invalid_argument("candidate grid needs n >= 1");
  std::vector<Vec2> c;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) c.push_back({(i + 0.5) * spec.a / n - spec.a / 2, (j + 0.5) * spec.a / n - spec.a / 2});
  return c;
}

struct TranslationChoice {
  Vec2 x0;
  double score = 0;
  size_t index = 0;
  std::vector<double> scores;
};

/// Argmin of `score` over the candidates; equal scores go to the
/// lexicographically smaller (x, then y) candidate.
inline TranslationChoice select_translation(const std::vector<Vec2>& candidates,
                                            const std::function<double(Vec2)>& score) {
  if (candidates.empty()) throw std::invalid_argument("select_translation: empty candidate list");
  TranslationChoice best;
  best.scores.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double v = score(candidates[i]);
    best.scores.push_back(v);
    const Vec2 c = candidates[i];
    const bool lex_less = c.x < best.x0.x || (c.x == best.x0.x && c.y < best.x0.y);
    if (i == 0 || v < best.score || (v == best.score && lex_less)) {
      best.x0 = c;
      best.score = v;
      best.index = i;
    }
  }
  return best;
}

/// Per-unit-height 2-D quantities of the lattice configuration on Omega.
struct OmegaTerms {
  double kinetic = 0;    // 1/2 int |grad rho|^2 + rho^2 |grad h|^2
  double potential = 0;  // int (1 - rho^2)^2 / (4 eps^2)
  double H2 = 0;         // int (h - h_ex)^2
  double Q() const { return kinetic + potential; }
  double F() const { return kinetic + potential + 0.5 * H2; }
};

namespace detail {

/// Midpoint quadrature on an (mx x my) sub-grid of Omega. `eval` returns the
/// lattice field sample. If Hcell is given it receives cell averages of
/// h - h_ex over blocks of sub x sub samples.
template <class Eval>
OmegaTerms omega_terms(const LatticeSpec& spec, const ModelParams& p, int mx, int my, Eval eval, Array2<double>* Hcell,
                       int sub) {
  const double dx = p.wx / mx, dy = p.wy / my, w = dx * dy, eps = p.epsilon;
  const double c = 1 / (4 * eps * eps);
  Accumulator kin, pot, h2;
  if (Hcell) *Hcell = Array2<double>(mx / sub, my / sub);
  for (int iy = 0; iy < my; ++iy)
    for (int ix = 0; ix < mx; ++ix) {
      Vec2 x{(ix + 0.5) * dx, (iy + 0.5) * dy};
      const double r = spec.nearest_distance(x);
      if (r < 1e-9 * spec.a) x.x += 1e-9 * spec.a;
      const auto smp = eval(x);
      const double rho = rho_profile(r, eps);
      const double gr2 = (r > eps && r < 2 * eps) ? 1 / (eps * eps) : 0.0;
      const double g2 = smp.grad.x * smp.grad.x + smp.grad.y * smp.grad.y;
      kin += 0.5 * w * (gr2 + rho * rho * g2);
      const double q = 1 - rho * rho;
      pot += w * c * q * q;
      const double H = smp.h - p.h_ex;
      h2 += w * H * H;
      if (Hcell) (*Hcell)(ix / sub, iy / sub) += H / (sub * sub);
    }
  return {kin.value(), pot.value(), h2.value()};
}

/// Quadrature sub-sampling per mesh cell: sample spacing at most eps/8.
inline int quad_sub(const ModelParams& p) {
  const double h = std::max(p.hx(), p.hy());
  return std::max(2, static_cast<int>(std::ceil(8 * h / p.epsilon - 1e-9)));
}

inline double wrap_angle(double t) { return t - 2 * std::numbers::pi * std::floor(t / (2 * std::numbers::pi) + 0.5); }

}  // namespace detail

/// F_eps of the lattice configuration translated by x0, via the fast lattice sum.
inline double score_translation(const LatticeField& f, const ModelParams& p, Vec2 x0, int sub) {
  LatticeField g = f;
  g.set_shift(x0);
  LatticeSpec spec = f.spec();
  spec.x0 = x0;
  return detail::omega_terms(spec, p, (p.mesh.nx - 1) * sub, (p.mesh.ny - 1) * sub,
                             [&](Vec2 x) { return g.fast(x); }, nullptr, sub)
      .F();
}

inline TranslationChoice select_translation(const std::vector<Vec2>& candidates, const ModelParams& p,
                                            double tol = 1e-10) {
  LatticeField f(LatticeSpec(p.h_ex), tol);
  const int sub = std::max(1, detail::quad_sub(p) / 2);
  return select_translation(candidates, [&](Vec2 x0) { return score_translation(f, p, x0, sub); });
}

struct ConstructionOptions {
  double d = 1.0;             // vertical cutoff extent
  int candidates = 8;         // x0 candidate grid per direction
  std::optional<Vec2> x0;     // skip the search and use this translation
  double lattice_tol = 1e-10; // K0 tail bound of the lattice sum
};

struct TestConstructionReport {
  DomainPtr dom;
  ModelParams params;
  ConstructionOptions options;
  LatticeSpec lattice;
  double truncation_radius = 0;
  int quad_sub = 0;
  std::vector<Vec2> candidates;
  std::vector<double> candidate_scores;

  // sampled fields
  Array2<double> h_eps, rho;  // Omega nodes
  Array2<double> H_cell;      // Omega cells, cell averages of h_eps - h_ex
  Array2<double> phi, xi;     // box plane cell centres including one ring outside: (NX+1, NY+1)
  std::vector<double> eta;    // box z nodes
  Array2<double> phase;       // Omega nodes, materialized phase of v
  LayeredConfiguration config;

  OmegaTerms omega;
  double grad_phi_xi2 = 0;  // int xi^2 |grad phi|^2
  double xi_phi = 0;        // int (grad xi . grad phi)^2
  double eta_prime2_upper = 0, eta2_upper = 0, eta_prime2_lower = 0, eta2_lower = 0;
  double I1 = 0, I2 = 0, I3 = 0, total = 0;
  double M_eps = 0, log_term = 0;
  EnergyBreakdown discrete;  // ld_energy of the assembled configuration on the box
  double kinetic_discrete = 0;  // per layer, from the materialized phase

  /// M_eps (1 + s/L + C / ln(1/(eps sqrt h_ex))).
  double bound(double C) const { return M_eps * (1 + params.s / params.height + C / log_term); }
  double ratio() const { return total / M_eps; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["epsilon"] = params.epsilon;
    j["s"] = params.s;
    j["n_layers"] = params.n_layers;
    j["height"] = params.height;
    j["h_ex"] = params.h_ex;
    j["d"] = options.d;
    j["x0"] = {lattice.x0.x, lattice.x0.y};
    j["lattice_cell"] = lattice.a;
    j["lattice_tol"] = options.lattice_tol;
    j["truncation_radius"] = truncation_radius;
    j["quadrature_sub"] = quad_sub;
    j["candidate_scores"] = candidate_scores;
    j["omega_kinetic"] = omega.kinetic;
    j["omega_potential"] = omega.potential;
    j["H_norm2"] = omega.H2;
    j["F_eps"] = omega.F();
    j["grad_phi_xi2"] = grad_phi_xi2;
    j["xi_phi"] = xi_phi;
    j["I1"] = I1;
    j["I2"] = I2;
    j["I3"] = I3;
    j["total"] = total;
    j["M_eps"] = M_eps;
    j["log_term"] = log_term;
    j["ratio"] = ratio();
    j["lemma_H"] = omega.H2 / (params.omega_area() * params.h_ex);
    j["lemma_xi_phi"] = xi_phi / (params.omega_area() * params.h_ex);
    j["lemma_I2"] = I2 / (0.5 * params.volume() * params.h_ex);
    j["discrete"] = discrete.to_json();
    j["kinetic_discrete"] = kinetic_discrete;
    return j;
  }
};

namespace detail {

/// Phase chi on Omega nodes with chi = sum_b arg(x - b) + w, w single valued,
/// whose link increments best match (in least squares) the line integrals of
/// B - grad^perp h along Omega links of plane k.
inline Array2<double> build_phase(const DomainDiscretization& d, const Potential3D& B, int k, const LatticeSpec& spec,
                                  const LatticeField& f) {
  const int nx = d.nx(), ny = d.ny(), px = d.px(), py = d.py();
  const double hx = d.hx(), hy = d.hy();
  const auto pts = spec.clipped_points(d.params().wx, d.params().wy);
  auto sum_arg = [&](Vec2 x) {
    double a = 0;
    for (auto b : pts) a += std::atan2(x.y - b.y, x.x - b.x);
    return a;
  };
  auto darg = [&](Vec2 t, Vec2 h) {
    double a = 0;
    for (auto b : pts) a += wrap_angle(std::atan2(h.y - b.y, h.x - b.x) - std::atan2(t.y - b.y, t.x - b.x));
    return a;
  };
  auto sample = [&](Vec2 x) {
    if (spec.nearest_distance(x) < 1e-9 * spec.a) x.x += 1e-9 * spec.a;
    return f.has_table() ? f.fast(x) : f.exact(x);
  };
  Array2<double> rx(nx - 1, ny), ry(nx, ny - 1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i) {
      const Vec2 t{i * hx, j * hy}, h{(i + 1) * hx, j * hy};
      const auto s = sample({(i + 0.5) * hx, j * hy});
      rx(i, j) = hx * (B.a1(px + i, py + j, k) + s.grad.y) - darg(t, h);
    }
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 t{i * hx, j * hy}, h{i * hx, (j + 1) * hy};
      const auto s = sample({i * hx, (j + 0.5) * hy});
      ry(i, j) = hy * (B.a2(px + i, py + j, k) - s.grad.x) - darg(t, h);
    }
  const size_t n = static_cast<size_t>(nx) * ny;
  std::vector<double> b(n, 0.0), w(n, 0.0);
  auto id = [nx](int i, int j) { return static_cast<size_t>(j) * nx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i) {
      b[id(i + 1, j)] += rx(i, j);
      b[id(i, j)] -= rx(i, j);
    }
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      b[id(i, j + 1)] += ry(i, j);
      b[id(i, j)] -= ry(i, j);
    }
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx - 1; ++i) {
        const double q = x[id(i + 1, j)] - x[id(i, j)];
        y[id(i + 1, j)] += q;
        y[id(i, j)] -= q;
      }
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx; ++i) {
        const double q = x[id(i, j + 1)] - x[id(i, j)];
        y[id(i, j + 1)] += q;
        y[id(i, j)] -= q;
      }
  };
  conjugate_gradient(apply, b, w, 1e-12, 20 * static_cast<int>(n));
  double mean = 0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(n);
  Array2<double> chi(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) chi(i, j) = sum_arg({i * hx, j * hy}) + w[id(i, j)] - mean;
  return chi;
}

}  // namespace detail

/// Builds the vortex-lattice test configuration ({v_n}, B) and its energy split.
inline TestConstructionReport assemble_test_configuration(const ModelParams& p, const ConstructionOptions& o = {}) {
  p.validate();
  p.check_resolution();
  if (!(o.d > 0)) throw ParamError("cutoff extent d must be positive");
  if (p.pad + 1e-12 < p.s / 2 + o.d) throw ParamError("pad must be at least s/2 + d so the eta cutoff fits in the box");
  if (!(p.h_ex > 0)) throw ParamError("construction needs h_ex > 0");
  TestConstructionReport rep;
  rep.params = p;
  rep.options = o;
  rep.dom = build_domain(p);
  const auto& d = *rep.dom;
  LatticeSpec spec(p.h_ex);
  check_cores_disjoint(spec, p.epsilon);
  LatticeField field(spec, o.lattice_tol);
  rep.truncation_radius = field.truncation_radius();
  const int sub = detail::quad_sub(p);
  rep.quad_sub = sub;

  if (o.x0) {
    spec.x0 = *o.x0;
  } else {
    rep.candidates = translation_candidates(spec, o.candidates);
    const int ssub = std::max(1, sub / 2);
    auto choice = select_translation(rep.candidates, [&](Vec2 x0) { return score_translation(field, p, x0, ssub); });
    rep.candidate_scores = choice.scores;
    spec.x0 = choice.x0;
  }
  field.set_shift(spec.x0);
  rep.lattice = spec;

  const int nx = p.mesh.nx, ny = p.mesh.ny;
  rep.omega = detail::omega_terms(spec, p, (nx - 1) * sub, (ny - 1) * sub, [&](Vec2 x) { return field.exact(x); },
                                  &rep.H_cell, sub);

  NewtonianPotential P(CellField2{0, 0, d.hx(), d.hy(), rep.H_cell});
  const Cutoffs cut = Cutoffs::for_params(p, o.d);

  // polar quadrature about the centre of Omega over B_{R+1}
  {
    const double r1 = 0.5 * p.diam_omega();
    const int nt = 256;
    Accumulator g2, ann;
    auto ring = [&](double a, double b, int nr, bool annulus) {
      const auto [rs, ws] = gauss_legendre(nr, a, b);
      for (int q = 0; q < nr; ++q)
        for (int t = 0; t < nt; ++t) {
          const double th = 2 * std::numbers::pi * t / nt, r = rs[q];
          const Vec2 x{cut.c.x + r * std::cos(th), cut.c.y + r * std::sin(th)};
          const Vec2 gp = P.grad(x);
          const double w = ws[q] * r * 2 * std::numbers::pi / nt;
          const double xi = cut.xi(x);
          g2 += w * xi * xi * (gp.x * gp.x + gp.y * gp.y);
          if (annulus) {
            const Vec2 gx = cut.grad_xi(x);
            const double dot = gx.x * gp.x + gx.y * gp.y;
            ann += w * dot * dot;
          }
        }
    };
    ring(0, r1, 48, false);
    ring(r1, cut.R, 24, false);
    ring(cut.R, cut.R + 1, 32, true);
    rep.grad_phi_xi2 = g2.value();
    rep.xi_phi = ann.value();
  }
  {
    const double lo = -p.s / 2, hi = p.height + p.s / 2;
    const auto [zu, wu] = gauss_legendre(64, hi, hi + o.d);
    const auto [zl, wl] = gauss_legendre(64, lo - o.d, lo);
    Accumulator a, b, c, e;
    for (size_t q = 0; q < zu.size(); ++q) {
      a += wu[q] * cut.eta_prime(zu[q]) * cut.eta_prime(zu[q]);
      b += wu[q] * cut.eta(zu[q]) * cut.eta(zu[q]);
      c += wl[q] * cut.eta_prime(zl[q]) * cut.eta_prime(zl[q]);
      e += wl[q] * cut.eta(zl[q]) * cut.eta(zl[q]);
    }
    rep.eta_prime2_upper = a.value();
    rep.eta2_upper = b.value();
    rep.eta_prime2_lower = c.value();
    rep.eta2_lower = e.value();
  }
  const double layer_mag = rep.omega.H2 + rep.xi_phi;  // int (xi Lap phi + grad xi . grad phi)^2
  const double layers = p.s * (p.n_layers + 1);
  rep.I1 = layers * (rep.omega.Q() + 0.5 * layer_mag);
  rep.I2 = 0.5 * rep.eta_prime2_upper * rep.grad_phi_xi2 + 0.5 * rep.eta2_upper * layer_mag;
  rep.I3 = 0.5 * rep.eta_prime2_lower * rep.grad_phi_xi2 + 0.5 * rep.eta2_lower * layer_mag;
  rep.total = rep.I1 + rep.I2 + rep.I3;
  rep.M_eps = m_epsilon(p);
  rep.log_term = std::log(1 / (p.epsilon * std::sqrt(p.h_ex)));

  // B on the box: stream function phi at cell centres, links are its rotated differences
  const int NX = d.NX(), NY = d.NY(), NZ = d.NZ();
  const double hx = d.hx(), hy = d.hy();
  rep.phi = Array2<double>(NX + 1, NY + 1);
  rep.xi = Array2<double>(NX + 1, NY + 1);
  for (int cj = -1; cj < NY; ++cj)
    for (int ci = -1; ci < NX; ++ci) {
      const Vec2 x{d.x(ci) + 0.5 * hx, d.y(cj) + 0.5 * hy};
      rep.phi(ci + 1, cj + 1) = P.value(x);
      rep.xi(ci + 1, cj + 1) = cut.xi(x);
    }
  rep.eta.resize(NZ);
  for (int k = 0; k < NZ; ++k) rep.eta[k] = cut.eta(d.z(k));
  Potential3D B = Potential3D::background(d);
  for (int k = 0; k < NZ; ++k) {
    const double et = rep.eta[k];
    if (et == 0) continue;
    for (int j = 0; j < NY; ++j)
      for (int i = 0; i < NX - 1; ++i) {
        const double xi = cut.xi({d.x(i) + 0.5 * hx, d.y(j)});
        B.a1(i, j, k) += -et * xi * (rep.phi(i + 1, j + 1) - rep.phi(i + 1, j)) / hy;
      }
    for (int j = 0; j < NY - 1; ++j)
      for (int i = 0; i < NX; ++i) {
        const double xi = cut.xi({d.x(i), d.y(j) + 0.5 * hy});
        B.a2(i, j, k) += et * xi * (rep.phi(i + 1, j + 1) - rep.phi(i, j + 1)) / hx;
      }
  }

  rep.h_eps = Array2<double>(nx, ny);
  rep.rho = Array2<double>(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Vec2 x{i * hx, j * hy};
      const double r = spec.nearest_distance(x);
      rep.rho(i, j) = rho_profile(r, p.epsilon);
      if (r < 1e-9 * spec.a) x.x += 1e-9 * spec.a;
      rep.h_eps(i, j) = field.fast(x).h;
    }
  rep.phase = detail::build_phase(d, B, d.layer_k(0), spec, field);

  rep.config = LayeredConfiguration(rep.dom);
  rep.config.A = std::move(B);
  Array2<cplx> v(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) v(i, j) = std::polar(rep.rho(i, j), rep.phase(i, j));
  for (auto& u : rep.config.u) u = v;
  rep.discrete = ld_energy(rep.config);
  rep.kinetic_discrete = rep.discrete.layer_kinetic / layers;
  return rep;
}

/// Winding number of u around the node rectangle [i0, i1] x [j0, j1],
/// counterclockwise, as the sum of wrapped phase increments over 2 pi.
inline double loop_winding(const Array2<cplx>& u, int i0, int j0, int i1, int j1) {
  if (!(i0 < i1 && j0 < j1) || i0 < 0 || j0 < 0 || i1 >= u.nx() || j1 >= u.ny())
    throw std::out_of_range("loop_winding: loop outside the grid");
  double w = 0;
  auto step = [&](int ia, int ja, int ib, int jb) { w += std::arg(u(ib, jb) * std::conj(u(ia, ja))); };
  for (int i = i0; i < i1; ++i) step(i, j0, i + 1, j0);
  for (int j = j0; j < j1; ++j) step(i1, j, i1, j + 1);
  for (int i = i1; i > i0; --i) step(i, j1, i - 1, j1);
  for (int j = j1; j > j0; --j) step(i0, j, i0, j - 1);
  return w / (2 * std::numbers::pi);
}

/// Unit-modulus phase factors exp(i chi) of the assembled configuration, one
/// copy per layer. Rejects lattices with a core within two grid cells of the
/// boundary of Omega, where a winding loop cannot be drawn on the grid.
inline LayerStack reconstruct_phase(const TestConstructionReport& rep) {
  const auto& p = rep.params;
  const double lim = 2 * std::max(p.hx(), p.hy());
  for (auto b : rep.lattice.clipped_points(p.wx, p.wy)) {
    const double ox = std::max({0.0, -b.x, b.x - p.wx}), oy = std::max({0.0, -b.y, b.y - p.wy});
    double dist;
    if (ox > 0 || oy > 0)
      dist = std::hypot(ox, oy);
    else
      dist = std::min({b.x, p.wx - b.x, b.y, p.wy - b.y});
    if (dist < lim) throw std::domain_error("reconstruct_phase: a vortex core lies within two grid cells of the boundary");
  }
  Array2<cplx> e(rep.phase.nx(), rep.phase.ny());
  for (int j = 0; j < e.ny(); ++j)
    for (int i = 0; i < e.nx(); ++i) e(i, j) = std::polar(1.0, rep.phase(i, j));
  return LayerStack(p.n_layers + 1, e);
}

}  // namespace ldgl
