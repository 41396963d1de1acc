#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldgl/energy.hpp"
#include "ldgl/fields.hpp"
#include "ldgl/linalg.hpp"
#include "ldgl/random.hpp"
#include "json.hpp"

namespace ldgl {

/// Initial trial step per iteration; every rule then backtracks to an Armijo step.
enum class StepRule { fixed, adaptive_bb, backtracking };

inline const char* step_rule_name(StepRule r) {
  switch (r) {
    case StepRule::fixed: return "fixed";
    case StepRule::adaptive_bb: return "adaptive-BB";
    case StepRule::backtracking: return "backtracking";
  }
  return "?";
}

inline StepRule parse_step_rule(const std::string& s) {
  if (s == "fixed") return StepRule::fixed;
  if (s == "adaptive-BB" || s == "adaptive_bb" || s == "bb") return StepRule::adaptive_bb;
  if (s == "backtracking") return StepRule::backtracking;
  throw std::invalid_argument("unknown step rule '" + s + "'");
}

struct MinimizeOptions {
  int max_iters = 2000;
  double grad_tol = 1e-6;  // stop when |grad| <= grad_tol (1 + |E|)
  StepRule step_rule = StepRule::adaptive_bb;
  double step0 = 1e-2;
  double max_step = 1e3;
  double armijo = 1e-4;
  int max_backtracks = 60;
  std::uint64_t seed = 0;      // recorded; used by the random initial states
  int gauge_fix_interval = 0;  // 0: none; k: Coulomb projection every k accepted steps
  bool clamp_polish = true;

  void validate() const {
    if (!(grad_tol > 0)) throw std::invalid_argument("grad_tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(step0 > 0)) throw std::invalid_argument("step0 must be positive");
    if (gauge_fix_interval < 0) throw std::invalid_argument("gauge_fix_interval must be >= 0");
  }
};

struct MinimizeTrace {
  std::vector<int> iter;
  std::vector<double> energy, grad_norm, step;
  EnergyBreakdown final_energy;
  double initial_energy = 0;
  double final_grad_norm = 0;
  std::string stop_reason;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool clamped = false;        // the polish changed the state
  double max_modulus = 0;      // max |u| after the polish

  std::string to_csv() const {
    std::ostringstream os;
    os << "iter,energy,gradnorm,step\n";
    char buf[128];
    for (size_t q = 0; q < iter.size(); ++q) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", iter[q], energy[q], grad_norm[q], step[q]);
      os << buf;
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    return {{"iterations", iterations}, {"stop_reason", stop_reason},   {"seed", seed},
            {"initial_energy", initial_energy}, {"final_grad_norm", final_grad_norm}, {"clamped", clamped},
            {"max_modulus", max_modulus},       {"energy", final_energy.to_json()}};
  }
};

class NonFiniteEnergy : public std::runtime_error {
 public:
  NonFiniteEnergy(int it) : std::runtime_error("non-finite energy at iterate " + std::to_string(it)), iterate(it) {}
  int iterate;
};

namespace detail {

struct Span {
  cplx* p;
  size_t n;
};

inline std::vector<Span> u_spans(LayeredConfiguration& s) {
  std::vector<Span> v;
  for (auto& l : s.u) v.push_back({l.data().data(), l.size()});
  return v;
}
inline std::vector<Span> u_spans(ContinuumConfiguration& s) { return {{s.psi.data().data(), s.psi.size()}}; }
inline std::vector<Span> u_spans(LDGradient& g) {
  std::vector<Span> v;
  for (auto& l : g.du) v.push_back({l.data().data(), l.size()});
  return v;
}
inline std::vector<Span> u_spans(AGLGradient& g) { return {{g.dpsi.data().data(), g.dpsi.size()}}; }

inline EnergyBreakdown evaluate(const LayeredConfiguration& s, LDGradient* g) { return eval_ld(s, g); }
inline EnergyBreakdown evaluate(const ContinuumConfiguration& s, AGLGradient* g) { return eval_agl(s, g); }

template <class S>
struct GradOf;
template <>
struct GradOf<LayeredConfiguration> {
  using type = LDGradient;
};
template <>
struct GradOf<ContinuumConfiguration> {
  using type = AGLGradient;
};

/// Flat indices of the links not pinned to the background.
struct FreeLinks {
  std::vector<size_t> a1, a2, a3;

  explicit FreeLinks(const Potential3D& A) {
    for (int k = 0; k < A.NZ; ++k)
      for (int j = 0; j < A.NY; ++j)
        for (int i = 0; i < A.NX; ++i) {
          if (i < A.NX - 1 && !A.a1_on_boundary(i, j, k)) a1.push_back(A.a1.index(i, j, k));
          if (j < A.NY - 1 && !A.a2_on_boundary(i, j, k)) a2.push_back(A.a2.index(i, j, k));
          if (k < A.NZ - 1 && !A.a3_on_boundary(i, j, k)) a3.push_back(A.a3.index(i, j, k));
        }
  }
  size_t size() const { return a1.size() + a2.size() + a3.size(); }
};

/// Layout: (Re, Im) of every order-parameter value, then free a1, a2, a3 links.
template <class S>
void pack_u_and_links(S& st, Potential3D& A, const FreeLinks& L, std::vector<double>& x) {
  x.clear();
  for (auto sp : u_spans(st))
    for (size_t q = 0; q < sp.n; ++q) {
      x.push_back(sp.p[q].real());
      x.push_back(sp.p[q].imag());
    }
  for (size_t q : L.a1) x.push_back(A.a1.data()[q]);
  for (size_t q : L.a2) x.push_back(A.a2.data()[q]);
  for (size_t q : L.a3) x.push_back(A.a3.data()[q]);
}

template <class S>
void unpack_u_and_links(S& st, Potential3D& A, const FreeLinks& L, const std::vector<double>& x) {
  size_t c = 0;
  for (auto sp : u_spans(st))
    for (size_t q = 0; q < sp.n; ++q, c += 2) sp.p[q] = cplx(x[c], x[c + 1]);
  for (size_t q : L.a1) A.a1.data()[q] = x[c++];
  for (size_t q : L.a2) A.a2.data()[q] = x[c++];
  for (size_t q : L.a3) A.a3.data()[q] = x[c++];
}

template <class S>
void pack(S& st, const FreeLinks& L, std::vector<double>& x) {
  pack_u_and_links(st, st.A, L, x);
}
template <class S>
void unpack(S& st, const FreeLinks& L, const std::vector<double>& x) {
  unpack_u_and_links(st, st.A, L, x);
}
template <class G>
void pack_grad(G& g, const FreeLinks& L, std::vector<double>& x) {
  pack_u_and_links(g, g.dA, L, x);
}

inline double norm2(const std::vector<double>& v) {
  Accumulator a;
  for (double t : v) a += t * t;
  return std::sqrt(a.value());
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  Accumulator s;
  for (size_t q = 0; q < a.size(); ++q) s += a[q] * b[q];
  return s.value();
}

template <class S>
double max_modulus(S& st) {
  double m = 0;
  for (auto sp : u_spans(st))
    for (size_t q = 0; q < sp.n; ++q) m = std::max(m, std::abs(sp.p[q]));
  return m;
}

template <class S>
bool clamp_modulus(S& st) {
  bool changed = false;
  for (auto sp : u_spans(st))
    for (size_t q = 0; q < sp.n; ++q) {
      const double r = std::abs(sp.p[q]);
      if (r > 1) {
        sp.p[q] /= r;
        changed = true;
      }
    }
  return changed;
}

}  // namespace detail

/// Gauge function g (zero on the box faces) with div(A + grad g) = 0 at interior nodes.
inline GaugeFunction coulomb_gauge(const DomainDiscretization& d, const Potential3D& A, double tol = 1e-10,
                                   int max_iter = 5000) {
  const int NX = A.NX, NY = A.NY, NZ = A.NZ;
  GaugeFunction G(d);
  if (NX < 3 || NY < 3 || NZ < 3) return G;
  const int ix = NX - 2, iy = NY - 2, iz = NZ - 2;
  auto id = [&](int i, int j, int k) { return (static_cast<size_t>(k - 1) * iy + (j - 1)) * ix + (i - 1); };
  const double cx = 1 / (A.hx * A.hx), cy = 1 / (A.hy * A.hy), cz = 1 / (A.dz * A.dz);
  std::vector<double> b(static_cast<size_t>(ix) * iy * iz), x(b.size(), 0.0);
  for (int k = 1; k <= iz; ++k)
    for (int j = 1; j <= iy; ++j)
      for (int i = 1; i <= ix; ++i)
        b[id(i, j, k)] = (A.a1(i, j, k) - A.a1(i - 1, j, k)) / A.hx + (A.a2(i, j, k) - A.a2(i, j - 1, k)) / A.hy +
                         (A.a3(i, j, k) - A.a3(i, j, k - 1)) / A.dz;
  // -Laplacian with zero Dirichlet data; solve -Lap g = div A
  auto apply = [&](const std::vector<double>& v, std::vector<double>& y) {
    auto at = [&](int i, int j, int k) {
      return (i < 1 || j < 1 || k < 1 || i > ix || j > iy || k > iz) ? 0.0 : v[id(i, j, k)];
    };
    for (int k = 1; k <= iz; ++k)
      for (int j = 1; j <= iy; ++j)
        for (int i = 1; i <= ix; ++i) {
          const double c = v[id(i, j, k)];
          y[id(i, j, k)] = cx * (2 * c - at(i - 1, j, k) - at(i + 1, j, k)) +
                           cy * (2 * c - at(i, j - 1, k) - at(i, j + 1, k)) +
                           cz * (2 * c - at(i, j, k - 1) - at(i, j, k + 1));
        }
  };
  conjugate_gradient(apply, b, x, tol, max_iter);
  for (int k = 1; k <= iz; ++k)
    for (int j = 1; j <= iy; ++j)
      for (int i = 1; i <= ix; ++i) G.g(i, j, k) = x[id(i, j, k)];
  return G;
}

/// Max |div A| over interior box nodes.
inline double max_divergence(const Potential3D& A) {
  double m = 0;
  for (int k = 1; k < A.NZ - 1; ++k)
    for (int j = 1; j < A.NY - 1; ++j)
      for (int i = 1; i < A.NX - 1; ++i)
        m = std::max(m, std::abs((A.a1(i, j, k) - A.a1(i - 1, j, k)) / A.hx + (A.a2(i, j, k) - A.a2(i, j - 1, k)) / A.hy +
                                 (A.a3(i, j, k) - A.a3(i, j, k - 1)) / A.dz));
  return m;
}

template <class S>
S coulomb_project(const S& st) {
  return apply_gauge(st, coulomb_gauge(*st.dom, st.A));
}

namespace detail {

template <class S>
std::pair<S, MinimizeTrace> minimize_impl(S st, const MinimizeOptions& o) {
  o.validate();
  st.check();
  st.dom->params().check_resolution();
  using G = typename GradOf<S>::type;
  const FreeLinks L(st.A);
  MinimizeTrace tr;
  tr.seed = o.seed;

  std::vector<double> x, g, xt, gt;
  auto eval = [&](S& s, std::vector<double>& grad, EnergyBreakdown& e) {
    G gr;
    e = evaluate(s, &gr);
    pack_grad(gr, L, grad);
    return e.total;
  };

  EnergyBreakdown e;
  double E = eval(st, g, e);
  if (!std::isfinite(E)) throw NonFiniteEnergy(0);
  tr.initial_energy = E;
  pack(st, L, x);
  double gn = norm2(g);
  tr.iter.push_back(0);
  tr.energy.push_back(E);
  tr.grad_norm.push_back(gn);
  tr.step.push_back(0);

  double alpha = o.step0, prev_alpha = o.step0;
  std::vector<double> x_prev, g_prev;
  bool have_prev = false;
  int since_fix = 0;
  S trial = st;
  tr.stop_reason = "max_iters";
  int it = 0;
  for (; it < o.max_iters; ++it) {
    if (gn <= o.grad_tol * (1 + std::abs(E))) {
      tr.stop_reason = "converged";
      break;
    }
    switch (o.step_rule) {
      case StepRule::fixed: alpha = o.step0; break;
      case StepRule::backtracking: alpha = std::min(2 * prev_alpha, o.max_step); break;
      case StepRule::adaptive_bb: {
        alpha = prev_alpha;
        if (have_prev) {
          double ss = 0, sy = 0;
          Accumulator a, b;
          for (size_t q = 0; q < x.size(); ++q) {
            const double sq = x[q] - x_prev[q], yq = g[q] - g_prev[q];
            a += sq * sq;
            b += sq * yq;
          }
          ss = a.value();
          sy = b.value();
          if (sy > 0) alpha = std::min(ss / sy, o.max_step);
        }
        break;
      }
    }
    const double g2 = gn * gn;
    bool ok = false;
    EnergyBreakdown et;
    double Et = 0;
    xt.resize(x.size());
    for (int bt = 0; bt <= o.max_backtracks; ++bt) {
      for (size_t q = 0; q < x.size(); ++q) xt[q] = x[q] - alpha * g[q];
      unpack(trial, L, xt);
      Et = eval(trial, gt, et);
      if (std::isfinite(Et) && Et <= E - o.armijo * alpha * g2) {
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!ok) {
      unpack(trial, L, x);
      tr.stop_reason = "line_search_failed";
      break;
    }
    x_prev.swap(x);
    g_prev.swap(g);
    x = xt;
    g = gt;
    have_prev = true;
    E = Et;
    e = et;
    gn = norm2(g);
    prev_alpha = alpha;
    std::swap(st, trial);
    if (o.gauge_fix_interval > 0 && ++since_fix == o.gauge_fix_interval) {
      since_fix = 0;
      st = coulomb_project(st);
      E = eval(st, g, e);
      pack(st, L, x);
      gn = norm2(g);
      have_prev = false;
    }
    tr.iter.push_back(it + 1);
    tr.energy.push_back(E);
    tr.grad_norm.push_back(gn);
    tr.step.push_back(alpha);
  }
  tr.iterations = it;
  if (o.clamp_polish) {
    S c = st;
    if (clamp_modulus(c)) {
      std::vector<double> gc;
      EnergyBreakdown ec;
      const double Ec = eval(c, gc, ec);
      // keep the projection unless it would undo descent from the initial state
      if (std::isfinite(Ec) && Ec <= tr.initial_energy) {
        st = std::move(c);
        e = ec;
        gn = norm2(gc);
        tr.clamped = true;
      }
    }
  }
  tr.final_energy = e;
  tr.final_grad_norm = gn;
  tr.max_modulus = max_modulus(st);
  return {std::move(st), std::move(tr)};
}

}  // namespace detail

inline std::pair<LayeredConfiguration, MinimizeTrace> minimize_ld(const LayeredConfiguration& init,
                                                                  const MinimizeOptions& o = {}) {
  return detail::minimize_impl(init, o);
}

inline std::pair<ContinuumConfiguration, MinimizeTrace> minimize_agl(const ContinuumConfiguration& init,
                                                                    const MinimizeOptions& o = {}) {
  return detail::minimize_impl(init, o);
}

/// |u| ~ U(0.5, 1), phase ~ U(0, 2 pi) per node; A = background plus smooth noise on free links.
inline LayeredConfiguration random_initial_layered(DomainPtr d, std::uint64_t seed, double a_noise = 0.05) {
  Rng r(seed);
  LayeredConfiguration st(d);
  for (auto& l : st.u)
    for (auto& v : l.data()) {
      const double m = uniform(r, 0.5, 1.0);
      v = std::polar(m, uniform(r, 0.0, 2 * std::numbers::pi));
    }
  Potential3D A = st.A;
  perturb_potential(A, *d, r, a_noise);
  const detail::FreeLinks L(st.A);
  for (size_t q : L.a1) st.A.a1.data()[q] = A.a1.data()[q];
  for (size_t q : L.a2) st.A.a2.data()[q] = A.a2.data()[q];
  for (size_t q : L.a3) st.A.a3.data()[q] = A.a3.data()[q];
  return st;
}

inline ContinuumConfiguration random_initial_continuum(DomainPtr d, std::uint64_t seed, double a_noise = 0.05) {
  Rng r(seed);
  ContinuumConfiguration st(d);
  for (auto& v : st.psi.data()) {
    const double m = uniform(r, 0.5, 1.0);
    v = std::polar(m, uniform(r, 0.0, 2 * std::numbers::pi));
  }
  Potential3D A = st.A;
  perturb_potential(A, *d, r, a_noise);
  const detail::FreeLinks L(st.A);
  for (size_t q : L.a1) st.A.a1.data()[q] = A.a1.data()[q];
  for (size_t q : L.a2) st.A.a2.data()[q] = A.a2.data()[q];
  for (size_t q : L.a3) st.A.a3.data()[q] = A.a3.data()[q];
  return st;
}

struct GradCheckResult {
  double max_rel = 0;
  int coords = 0;
  size_t worst = 0;  // flat coordinate index of the worst mismatch
};

/// Central differences of E against g on `n` seeded random coordinates.
/// Mismatch |fd - g| / max(|fd|, |g|, floor).
inline GradCheckResult fd_compare(std::vector<double> x, const std::vector<double>& g,
                                  const std::function<long double(const std::vector<double>&)>& E, double step,
                                  int n, std::uint64_t seed, double floor) {
  if (!(step >= 1e-8 && step <= 1e-3)) throw std::invalid_argument("fd_step must lie in [1e-8, 1e-3]");
  std::vector<size_t> idx(x.size());
  for (size_t q = 0; q < idx.size(); ++q) idx[q] = q;
  Rng r(seed);
  const size_t m = std::min(idx.size(), static_cast<size_t>(std::max(n, 0)));
  for (size_t q = 0; q < m; ++q) {
    std::uniform_int_distribution<size_t> pick(q, idx.size() - 1);
    std::swap(idx[q], idx[pick(r)]);
  }
  GradCheckResult res;
  for (size_t t = 0; t < m; ++t) {
    const size_t q = idx[t];
    const double x0 = x[q];
    x[q] = x0 + step;
    const long double ep = E(x);
    x[q] = x0 - step;
    const long double em = E(x);
    x[q] = x0;
    const double fd = static_cast<double>((ep - em) / (2 * step));
    const double den = std::max({std::abs(fd), std::abs(g[q]), floor});
    const double r2 = std::abs(fd - g[q]) / den;
    if (r2 > res.max_rel || t == 0) {
      res.max_rel = r2;
      res.worst = q;
    }
  }
  res.coords = static_cast<int>(m);
  return res;
}

enum class EnergyKind { ld, agl, f2d };

inline GradCheckResult gradient_check(const LayeredConfiguration& st, double fd_step = 1e-6, int n = 200,
                                      std::uint64_t seed = 1, double floor = 1e-9) {
  LayeredConfiguration s = st;
  const detail::FreeLinks L(s.A);
  std::vector<double> x, g;
  LDGradient gr;
  detail::eval_ld(s, &gr);
  detail::pack(s, L, x);
  detail::pack_grad(gr, L, g);
  auto E = [&](const std::vector<double>& v) {
    detail::unpack(s, L, v);
    return detail::eval_ld(s, nullptr).precise_total;
  };
  return fd_compare(x, g, E, fd_step, n, seed, floor);
}

inline GradCheckResult gradient_check(const ContinuumConfiguration& st, double fd_step = 1e-6, int n = 200,
                                      std::uint64_t seed = 1, double floor = 1e-9) {
  ContinuumConfiguration s = st;
  const detail::FreeLinks L(s.A);
  std::vector<double> x, g;
  AGLGradient gr;
  detail::eval_agl(s, &gr);
  detail::pack(s, L, x);
  detail::pack_grad(gr, L, g);
  auto E = [&](const std::vector<double>& v) {
    detail::unpack(s, L, v);
    return detail::eval_agl(s, nullptr).precise_total;
  };
  return fd_compare(x, g, E, fd_step, n, seed, floor);
}

/// The 2-D energy of one layer's order parameter and plane links; every link is free.
inline GradCheckResult gradient_check(const Array2<cplx>& u0, const PlaneField& f0, GLMode mode, double eps,
                                      double fd_step = 1e-6, int n = 200, std::uint64_t seed = 1,
                                      double floor = 1e-9) {
  Array2<cplx> u = u0;
  PlaneField f = f0;
  GL2DGradient gr;
  gl2d_energy(u, f, mode, eps, &gr);
  std::vector<double> x, g;
  for (auto v : u.data()) x.insert(x.end(), {v.real(), v.imag()});
  for (double v : f.a.a1.data()) x.push_back(v);
  for (double v : f.a.a2.data()) x.push_back(v);
  for (auto v : gr.du.data()) g.insert(g.end(), {v.real(), v.imag()});
  for (double v : gr.da.a1.data()) g.push_back(v);
  for (double v : gr.da.a2.data()) g.push_back(v);
  auto E = [&](const std::vector<double>& v) -> long double {
    size_t c = 0;
    for (auto& w : u.data()) {
      w = cplx(v[c], v[c + 1]);
      c += 2;
    }
    for (double& w : f.a.a1.data()) w = v[c++];
    for (double& w : f.a.a2.data()) w = v[c++];
    long double e = 0;
    gl2d_energy(u, f, mode, eps, nullptr, &e);
    return e;
  };
  return fd_compare(x, g, E, fd_step, n, seed, floor);
}

}  // namespace ldgl
