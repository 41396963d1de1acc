#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "json.hpp"
#include "ldgl/domain.hpp"
#include "ldgl/fields.hpp"
#include "ldgl/grid.hpp"

namespace ldgl {

struct EnergyBreakdown {
  double layer_kinetic = 0;
  double gl_potential = 0;
  double josephson = 0;  // AGL: the lambda^-2 vertical covariant term
  double magnetic_in_D = 0;
  double magnetic_exterior = 0;
  double magnetic_mixed_in_D = 0;
  double total = 0;
  // extended-precision total, used for finite-difference checks only
  long double precise_total = 0;

  static constexpr std::array<const char*, 7> names = {"layer_kinetic",     "gl_potential",       "josephson",
                                                       "magnetic_in_D",     "magnetic_exterior", "magnetic_mixed_in_D",
                                                       "total"};

  std::array<double, 7> values() const {
    return {layer_kinetic, gl_potential, josephson, magnetic_in_D, magnetic_exterior, magnetic_mixed_in_D, total};
  }
  double magnetic() const { return magnetic_in_D + magnetic_exterior + magnetic_mixed_in_D; }

  void finish() {
    Accumulator a;
    a += layer_kinetic;
    a += gl_potential;
    a += josephson;
    a += magnetic_in_D;
    a += magnetic_exterior;
    a += magnetic_mixed_in_D;
    total = a.value();
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    auto v = values();
    for (size_t i = 0; i < names.size(); ++i) j[names[i]] = v[i];
    return j;
  }
  static EnergyBreakdown from_json(const nlohmann::json& j) {
    EnergyBreakdown e;
    e.layer_kinetic = j.at("layer_kinetic");
    e.gl_potential = j.at("gl_potential");
    e.josephson = j.at("josephson");
    e.magnetic_in_D = j.at("magnetic_in_D");
    e.magnetic_exterior = j.at("magnetic_exterior");
    e.magnetic_mixed_in_D = j.at("magnetic_mixed_in_D");
    e.total = j.at("total");
    return e;
  }
  static std::string csv_header() {
    std::string s;
    for (size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + std::string(names[i]);
    return s;
  }
  std::string csv_row() const {
    std::string s;
    char buf[32];
    auto v = values();
    for (size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      s += (i ? "," : "") + std::string(buf);
    }
    return s;
  }
};

struct LDGradient {
  LayerStack du;   // dE/dRe + i dE/dIm
  Potential3D dA;  // dE/da per link
};

struct AGLGradient {
  Array3<cplx> dpsi;
  Potential3D dA;
};

namespace detail {

inline double wz_end(int k, int n) { return (k == 0 || k == n - 1) ? 0.5 : 1.0; }

/// fac * 1/2 sum over Omega links |D u|^2 with trapezoid link weights.
/// U(i,j) -> cplx, A1/A2(i,j) -> double; gradient sinks may be null-ops.
template <class U, class A1, class A2, class GU, class GA1, class GA2>
void plane_kinetic(int nx, int ny, double hx, double hy, double fac, U u, A1 a1, A2 a2, Accumulator& acc,
                   bool grad, GU gu, GA1 ga1, GA2 ga2) {
  for (int j = 0; j < ny; ++j) {
    const double W = fac * hx * hy * DomainDiscretization::edge_weight(j, ny);
    for (int i = 0; i < nx - 1; ++i) {
      const cplx P = link_phase(hx, a1(i, j));
      const cplx uh = u(i + 1, j), ut = u(i, j);
      const cplx z = (uh * P - ut) / hx;
      acc += 0.5 * W * std::norm(z);
      if (grad) {
        gu(i + 1, j) += W * std::conj(P) * z / hx;
        gu(i, j) -= W * z / hx;
        ga1(i, j) += W * std::real(std::conj(z) * (cplx(0, -1) * uh * P));
      }
    }
  }
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      const double W = fac * hx * hy * DomainDiscretization::edge_weight(i, nx);
      const cplx P = link_phase(hy, a2(i, j));
      const cplx uh = u(i, j + 1), ut = u(i, j);
      const cplx z = (uh * P - ut) / hy;
      acc += 0.5 * W * std::norm(z);
      if (grad) {
        gu(i, j + 1) += W * std::conj(P) * z / hy;
        gu(i, j) -= W * z / hy;
        ga2(i, j) += W * std::real(std::conj(z) * (cplx(0, -1) * uh * P));
      }
    }
}

/// fac * sum_nodes w (1-|u|^2)^2 / (4 eps^2).
template <class U, class GU>
void plane_potential(const DomainDiscretization& d, double eps, double fac, U u, Accumulator& acc, bool grad, GU gu) {
  const double c = 1.0 / (4 * eps * eps);
  for (int j = 0; j < d.ny(); ++j)
    for (int i = 0; i < d.nx(); ++i) {
      const double W = fac * d.w_node(i, j);
      const cplx v = u(i, j);
      const double q = 1 - std::norm(v);
      acc += W * c * q * q;
      if (grad) gu(i, j) += -W * q * v / (eps * eps);
    }
}

/// 1/2 int_box |curl A - h_ex e3|^2 split by dual-volume D fraction.
inline long double magnetic(const DomainDiscretization& d, const Potential3D& A, EnergyBreakdown& e, Potential3D* g) {
  const int NX = A.NX, NY = A.NY, NZ = A.NZ;
  const double hx = A.hx, hy = A.hy, dz = A.dz, h = A.h_ex;
  const double half = 0.5 * hx * hy * dz;
  Accumulator in3, ext, mix;
  // c3 plaquettes, halves in cells k-1 and k
  for (int k = 0; k < NZ; ++k)
    for (int j = 0; j < NY - 1; ++j)
      for (int i = 0; i < NX - 1; ++i) {
        const double c = (A.a2(i + 1, j, k) - A.a2(i, j, k)) / hx - (A.a1(i, j + 1, k) - A.a1(i, j, k)) / hy;
        const double r = c - h;
        double vin = 0, vout = 0;
        if (k > 0) (d.cell_in_D(i, j, k - 1) ? vin : vout) += half;
        if (k < NZ - 1) (d.cell_in_D(i, j, k) ? vin : vout) += half;
        in3 += 0.5 * vin * r * r;
        ext += 0.5 * vout * r * r;
        if (g) {
          const double q = (vin + vout) * r;
          g->a2(i + 1, j, k) += q / hx;
          g->a2(i, j, k) -= q / hx;
          g->a1(i, j + 1, k) -= q / hy;
          g->a1(i, j, k) += q / hy;
        }
      }
  // c1 plaquettes, halves in cells i-1 and i
  for (int k = 0; k < NZ - 1; ++k)
    for (int j = 0; j < NY - 1; ++j)
      for (int i = 0; i < NX; ++i) {
        const double c = (A.a3(i, j + 1, k) - A.a3(i, j, k)) / hy - (A.a2(i, j, k + 1) - A.a2(i, j, k)) / dz;
        double vin = 0, vout = 0;
        if (i > 0) (d.cell_in_D(i - 1, j, k) ? vin : vout) += half;
        if (i < NX - 1) (d.cell_in_D(i, j, k) ? vin : vout) += half;
        mix += 0.5 * vin * c * c;
        ext += 0.5 * vout * c * c;
        if (g) {
          const double q = (vin + vout) * c;
          g->a3(i, j + 1, k) += q / hy;
          g->a3(i, j, k) -= q / hy;
          g->a2(i, j, k + 1) -= q / dz;
          g->a2(i, j, k) += q / dz;
        }
      }
  // c2 plaquettes, halves in cells j-1 and j
  for (int k = 0; k < NZ - 1; ++k)
    for (int j = 0; j < NY; ++j)
      for (int i = 0; i < NX - 1; ++i) {
        const double c = (A.a1(i, j, k + 1) - A.a1(i, j, k)) / dz - (A.a3(i + 1, j, k) - A.a3(i, j, k)) / hx;
        double vin = 0, vout = 0;
        if (j > 0) (d.cell_in_D(i, j - 1, k) ? vin : vout) += half;
        if (j < NY - 1) (d.cell_in_D(i, j, k) ? vin : vout) += half;
        mix += 0.5 * vin * c * c;
        ext += 0.5 * vout * c * c;
        if (g) {
          const double q = (vin + vout) * c;
          g->a1(i, j, k + 1) += q / dz;
          g->a1(i, j, k) -= q / dz;
          g->a3(i + 1, j, k) -= q / hx;
          g->a3(i, j, k) += q / hx;
        }
      }
  e.magnetic_in_D = in3.value();
  e.magnetic_exterior = ext.value();
  e.magnetic_mixed_in_D = mix.value();
  return in3.precise() + ext.precise() + mix.precise();
}

inline Potential3D zero_like(const Potential3D& A) {
  Potential3D z = A;
  std::fill(z.a1.data().begin(), z.a1.data().end(), 0.0);
  std::fill(z.a2.data().begin(), z.a2.data().end(), 0.0);
  std::fill(z.a3.data().begin(), z.a3.data().end(), 0.0);
  return z;
}

inline EnergyBreakdown eval_ld(const LayeredConfiguration& st, LDGradient* grad) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  const auto& A = st.A;
  const int px = d.px(), py = d.py(), nx = d.nx(), ny = d.ny();
  const double s = p.s;
  const bool g = grad != nullptr;
  if (g) {
    grad->du.assign(st.layers(), Array2<cplx>(nx, ny));
    grad->dA = zero_like(A);
  }
  EnergyBreakdown e;
  Accumulator kin, pot, jos;
  for (int n = 0; n < st.layers(); ++n) {
    const int k = d.layer_k(n);
    const auto& u = st.u[n];
    auto U = [&](int i, int j) { return u(i, j); };
    auto A1 = [&](int i, int j) { return A.a1(px + i, py + j, k); };
    auto A2 = [&](int i, int j) { return A.a2(px + i, py + j, k); };
    cplx dummy_c;
    double dummy_d;
    auto GU = [&](int i, int j) -> cplx& { return g ? grad->du[n](i, j) : dummy_c; };
    auto G1 = [&](int i, int j) -> double& { return g ? grad->dA.a1(px + i, py + j, k) : dummy_d; };
    auto G2 = [&](int i, int j) -> double& { return g ? grad->dA.a2(px + i, py + j, k) : dummy_d; };
    plane_kinetic(nx, ny, d.hx(), d.hy(), s, U, A1, A2, kin, g, GU, G1, G2);
    plane_potential(d, p.epsilon, s, U, pot, g, GU);
  }
  const double cj = 1.0 / (2 * p.lambda * p.lambda * s);
  const int m = d.sub();
  for (int n = 0; n + 1 < st.layers(); ++n) {
    const int k0 = d.layer_k(n);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double phi = 0;
        for (int k = k0; k < k0 + m; ++k) phi += A.a3(px + i, py + j, k) * A.dz;
        const cplx E = std::polar(1.0, phi);
        const cplx un = st.u[n](i, j);
        const cplx z = st.u[n + 1](i, j) - un * E;
        const double W = cj * d.w_node(i, j);
        jos += W * std::norm(z);
        if (g) {
          grad->du[n + 1](i, j) += 2 * W * z;
          grad->du[n](i, j) += -2 * W * std::conj(E) * z;
          const double dphi = 2 * W * std::real(std::conj(z) * (cplx(0, -1) * un * E));
          for (int k = k0; k < k0 + m; ++k) grad->dA.a3(px + i, py + j, k) += dphi * A.dz;
        }
      }
  }
  e.layer_kinetic = kin.value();
  e.gl_potential = pot.value();
  e.josephson = jos.value();
  const long double mag = magnetic(d, A, e, g ? &grad->dA : nullptr);
  e.finish();
  e.precise_total = kin.precise() + pot.precise() + jos.precise() + mag;
  return e;
}

inline EnergyBreakdown eval_agl(const ContinuumConfiguration& st, AGLGradient* grad) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  const auto& A = st.A;
  const int px = d.px(), py = d.py(), nx = d.nx(), ny = d.ny(), nz = st.nz(), kb = d.k_bottom();
  const double dz = d.dz();
  const bool g = grad != nullptr;
  if (g) {
    grad->dpsi = Array3<cplx>(nx, ny, nz);
    grad->dA = zero_like(A);
  }
  EnergyBreakdown e;
  Accumulator kin, pot, ver;
  for (int kk = 0; kk < nz; ++kk) {
    const int k = kb + kk;
    const double fac = dz * wz_end(kk, nz);
    auto U = [&](int i, int j) { return st.psi(i, j, kk); };
    auto A1 = [&](int i, int j) { return A.a1(px + i, py + j, k); };
    auto A2 = [&](int i, int j) { return A.a2(px + i, py + j, k); };
    cplx dummy_c;
    double dummy_d;
    auto GU = [&](int i, int j) -> cplx& { return g ? grad->dpsi(i, j, kk) : dummy_c; };
    auto G1 = [&](int i, int j) -> double& { return g ? grad->dA.a1(px + i, py + j, k) : dummy_d; };
    auto G2 = [&](int i, int j) -> double& { return g ? grad->dA.a2(px + i, py + j, k) : dummy_d; };
    plane_kinetic(nx, ny, d.hx(), d.hy(), fac, U, A1, A2, kin, g, GU, G1, G2);
    plane_potential(d, p.epsilon, fac, U, pot, g, GU);
  }
  const double il2 = 1.0 / (p.lambda * p.lambda);
  for (int kk = 0; kk + 1 < nz; ++kk) {
    const int k = kb + kk;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double W = il2 * d.w_node(i, j) * dz;
        const cplx P = link_phase(dz, A.a3(px + i, py + j, k));
        const cplx uh = st.psi(i, j, kk + 1);
        const cplx z = (uh * P - st.psi(i, j, kk)) / dz;
        ver += 0.5 * W * std::norm(z);
        if (g) {
          grad->dpsi(i, j, kk + 1) += W * std::conj(P) * z / dz;
          grad->dpsi(i, j, kk) -= W * z / dz;
          grad->dA.a3(px + i, py + j, k) += W * std::real(std::conj(z) * (cplx(0, -1) * uh * P));
        }
      }
  }
  e.layer_kinetic = kin.value();
  e.gl_potential = pot.value();
  e.josephson = ver.value();
  const long double mag = magnetic(d, A, e, g ? &grad->dA : nullptr);
  e.finish();
  e.precise_total = kin.precise() + pot.precise() + ver.precise() + mag;
  return e;
}

}  // namespace detail

inline EnergyBreakdown ld_energy(const LayeredConfiguration& st) { return detail::eval_ld(st, nullptr); }
inline EnergyBreakdown agl_energy(const ContinuumConfiguration& st) { return detail::eval_agl(st, nullptr); }

inline LDGradient ld_gradient(const LayeredConfiguration& st, EnergyBreakdown* e = nullptr) {
  LDGradient g;
  auto r = detail::eval_ld(st, &g);
  if (e) *e = r;
  return g;
}
inline AGLGradient agl_gradient(const ContinuumConfiguration& st, EnergyBreakdown* e = nullptr) {
  AGLGradient g;
  auto r = detail::eval_agl(st, &g);
  if (e) *e = r;
  return g;
}

enum class GLMode { restricted_F, full_plane_GL };

/// Links of a 2-D plane grid that contains Omega's node block at (px, py).
/// For restricted_F the plane grid is Omega itself (px = py = 0).
struct PlaneField {
  InPlaneLinks a;
  int px = 0, py = 0;
  double h_ex = 0;
};

struct GL2DGradient {
  Array2<cplx> du;  // on Omega's nodes
  InPlaneLinks da;  // same shape as the plane field's links
};

/// F_eps (restricted_F) or GL_eps (full_plane_GL) of u on Omega's grid:
/// 1/2 int_Omega |grad_A u|^2 + (1-|u|^2)^2/(4 eps^2), plus 1/2 int (curl a - h)^2
/// over Omega or over the whole plane grid.
inline double gl2d_energy(const Array2<cplx>& u, const PlaneField& f, GLMode mode, double eps,
                          GL2DGradient* grad = nullptr, long double* precise = nullptr) {
  const int nx = u.nx(), ny = u.ny();
  const int NX = f.a.a2.nx(), NY = f.a.a1.ny();
  require_shape(f.a.a1.nx() == NX - 1 && f.a.a2.ny() == NY - 1, "plane links");
  if (mode == GLMode::restricted_F) {
    if (NX != nx || NY != ny || f.px != 0 || f.py != 0) throw ShapeError("restricted_F expects links on the Omega grid");
  } else {
    if (f.px < 0 || f.py < 0 || f.px + nx > NX || f.py + ny > NY)
      throw ShapeError("full_plane_GL expects a plane grid containing Omega");
  }
  const bool g = grad != nullptr;
  if (g) {
    grad->du = Array2<cplx>(nx, ny);
    grad->da = InPlaneLinks{Array2<double>(NX - 1, NY), Array2<double>(NX, NY - 1), f.a.hx, f.a.hy};
  }
  const double hx = f.a.hx, hy = f.a.hy;
  Accumulator acc;
  auto U = [&](int i, int j) { return u(i, j); };
  auto A1 = [&](int i, int j) { return f.a.a1(f.px + i, f.py + j); };
  auto A2 = [&](int i, int j) { return f.a.a2(f.px + i, f.py + j); };
  cplx dc;
  double dd;
  auto GU = [&](int i, int j) -> cplx& { return g ? grad->du(i, j) : dc; };
  auto GA1 = [&](int i, int j) -> double& { return g ? grad->da.a1(f.px + i, f.py + j) : dd; };
  auto GA2 = [&](int i, int j) -> double& { return g ? grad->da.a2(f.px + i, f.py + j) : dd; };
  detail::plane_kinetic(nx, ny, hx, hy, 1.0, U, A1, A2, acc, g, GU, GA1, GA2);
  const double c = 1.0 / (4 * eps * eps);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double W = hx * hy * DomainDiscretization::edge_weight(i, nx) * DomainDiscretization::edge_weight(j, ny);
      const double q = 1 - std::norm(u(i, j));
      acc += W * c * q * q;
      if (g) grad->du(i, j) += -W * q * u(i, j) / (eps * eps);
    }
  for (int j = 0; j < NY - 1; ++j)
    for (int i = 0; i < NX - 1; ++i) {
      const bool in = i >= f.px && i < f.px + nx - 1 && j >= f.py && j < f.py + ny - 1;
      if (mode == GLMode::restricted_F && !in) continue;
      const double cu = (f.a.a2(i + 1, j) - f.a.a2(i, j)) / hx - (f.a.a1(i, j + 1) - f.a.a1(i, j)) / hy;
      const double r = cu - f.h_ex;
      acc += 0.5 * hx * hy * r * r;
      if (g) {
        grad->da.a2(i + 1, j) += hy * r;
        grad->da.a2(i, j) -= hy * r;
        grad->da.a1(i, j + 1) -= hx * r;
        grad->da.a1(i, j) += hx * r;
      }
    }
  if (precise) *precise = acc.precise();
  return acc.value();
}

/// The trace of A on a box plane, either over Omega or over the whole plane.
inline PlaneField plane_field(const Potential3D& A, const DomainDiscretization& d, int k, GLMode mode) {
  PlaneField f;
  f.h_ex = A.h_ex;
  if (mode == GLMode::restricted_F) {
    f.a = layer_links(A, d, k);
    return f;
  }
  f.a = InPlaneLinks{Array2<double>(A.NX - 1, A.NY), Array2<double>(A.NX, A.NY - 1), A.hx, A.hy};
  for (int j = 0; j < A.NY; ++j)
    for (int i = 0; i < A.NX - 1; ++i) f.a.a1(i, j) = A.a1(i, j, k);
  for (int j = 0; j < A.NY - 1; ++j)
    for (int i = 0; i < A.NX; ++i) f.a.a2(i, j) = A.a2(i, j, k);
  f.px = d.px();
  f.py = d.py();
  return f;
}

}  // namespace ldgl
