#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldgl/domain.hpp"
#include "ldgl/energy.hpp"
#include "ldgl/fields.hpp"
#include "ldgl/linalg.hpp"
#include "ldgl/potentials.hpp"

namespace ldgl {

// ---------------------------------------------------------------- vorticity

/// mu_n = curl(i u, grad_A u) + curl A on Omega's cells, per unit area.
struct VorticityField {
  std::vector<Array2<double>> mu;
  std::vector<double> total;        // int_Omega mu_n
  std::vector<double> circulation;  // sum over the boundary loop of (w + h a)
  double hx = 1, hy = 1;

  int layers() const { return static_cast<int>(mu.size()); }
  /// Boundary circulation / 2 pi, rounded; exact once u does not vanish on the loop.
  long winding(int n) const { return std::lround(circulation.at(n) / (2 * std::numbers::pi)); }
};

namespace detail {

/// Gauge-invariant link angle w = arg(conj(u_t) u_h e^{-i h a}).
inline double link_angle(cplx ut, cplx uh, double h, double a) { return std::arg(std::conj(ut) * uh * link_phase(h, a)); }

}  // namespace detail

inline Array2<double> layer_vorticity(const Array2<cplx>& u, const InPlaneLinks& a, double* total = nullptr,
                                      double* circulation = nullptr) {
  const int nx = u.nx(), ny = u.ny();
  const double hx = a.hx, hy = a.hy;
  // loop contributions of each link: rho_t rho_h w + h a (current) and w + h a (phase only)
  Array2<double> lx(nx - 1, ny), ly(nx, ny - 1), px(nx - 1, ny), py(nx, ny - 1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i) {
      const double w = detail::link_angle(u(i, j), u(i + 1, j), hx, a.a1(i, j));
      lx(i, j) = std::abs(u(i, j)) * std::abs(u(i + 1, j)) * w + hx * a.a1(i, j);
      px(i, j) = w + hx * a.a1(i, j);
    }
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      const double w = detail::link_angle(u(i, j), u(i, j + 1), hy, a.a2(i, j));
      ly(i, j) = std::abs(u(i, j)) * std::abs(u(i, j + 1)) * w + hy * a.a2(i, j);
      py(i, j) = w + hy * a.a2(i, j);
    }
  Array2<double> mu(nx - 1, ny - 1);
  Accumulator tot;
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx - 1; ++i) {
      const double loop = lx(i, j) + ly(i + 1, j) - lx(i, j + 1) - ly(i, j);
      mu(i, j) = loop / (hx * hy);
      tot += loop;
    }
  if (total) *total = tot.value();
  if (circulation) {
    Accumulator c;
    for (int i = 0; i < nx - 1; ++i) c += px(i, 0) - px(i, ny - 1);
    for (int j = 0; j < ny - 1; ++j) c += py(nx - 1, j) - py(0, j);
    *circulation = c.value();
  }
  return mu;
}

inline VorticityField vorticity(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  VorticityField v;
  v.hx = d.hx();
  v.hy = d.hy();
  for (int n = 0; n < st.layers(); ++n) {
    double t = 0, c = 0;
    v.mu.push_back(layer_vorticity(st.u[n], layer_links(st.A, d, d.layer_k(n)), &t, &c));
    v.total.push_back(t);
    v.circulation.push_back(c);
  }
  return v;
}

// ---------------------------------------------------------------- H^-1

enum class Centering { node, cell };

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ||f||_{H^-1} = sqrt(int |grad w|^2) with -lap w = f, w = 0 on the boundary.
/// Node fields: unknowns on interior nodes, boundary values of f unused.
/// Cell fields: unknowns at cell centres, Dirichlet through mirrored ghosts.
inline double h_minus1_norm(const Array2<double>& f, double hx, double hy, Centering c = Centering::node,
                            double tol = 1e-10) {
  for (double v : f.data())
    if (!std::isfinite(v)) throw std::invalid_argument("h_minus1_norm: non-finite input");
  const int off = c == Centering::node ? 1 : 0;
  const int mx = f.nx() - 2 * off, my = f.ny() - 2 * off;
  if (mx <= 0 || my <= 0) return 0;
  const double ix2 = 1 / (hx * hx), iy2 = 1 / (hy * hy);
  const bool ghost = c == Centering::cell;
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    y.assign(x.size(), 0.0);
    for (int j = 0; j < my; ++j)
      for (int i = 0; i < mx; ++i) {
        const size_t q = static_cast<size_t>(j) * mx + i;
        const double w = x[q];
        double r = 0;
        auto nb = [&](int ii, int jj, double k2) {
          if (ii < 0 || ii >= mx || jj < 0 || jj >= my)
            r += (ghost ? 2 : 1) * k2 * w;
          else
            r += k2 * (w - x[static_cast<size_t>(jj) * mx + ii]);
        };
        nb(i - 1, j, ix2);
        nb(i + 1, j, ix2);
        nb(i, j - 1, iy2);
        nb(i, j + 1, iy2);
        y[q] = r;
      }
  };
  std::vector<double> b(static_cast<size_t>(mx) * my), x;
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) b[static_cast<size_t>(j) * mx + i] = f(i + off, j + off);
  const auto res = conjugate_gradient(apply, b, x, tol, 10 * f.nx() * f.ny());
  if (!res.converged) throw SolverError("h_minus1_norm: CG did not converge");
  Accumulator acc;
  for (size_t q = 0; q < b.size(); ++q) acc += b[q] * x[q] * hx * hy;
  return std::sqrt(std::max(0.0, acc.value()));
}

/// || (1/(N+1)) sum_n mu_n / h_ex - 1 ||_{H^-1(Omega)} on Omega's cells.
inline double average_vorticity_distance(const VorticityField& v, double h_ex) {
  if (!(h_ex > 0)) throw std::invalid_argument("average_vorticity_distance needs h_ex > 0");
  if (v.mu.empty()) throw std::invalid_argument("average_vorticity_distance: no layers");
  Array2<double> f(v.mu[0].nx(), v.mu[0].ny());
  const double L = v.layers();
  for (size_t q = 0; q < f.size(); ++q) {
    double s = 0;
    for (const auto& m : v.mu) s += m.data()[q];
    f.data()[q] = s / (L * h_ex) - 1;
  }
  return h_minus1_norm(f, v.hx, v.hy, Centering::cell);
}

inline double average_vorticity_distance(const LayeredConfiguration& st) {
  return average_vorticity_distance(vorticity(st), st.dom->params().h_ex);
}

// ---------------------------------------------------------------- interpolation

/// Plane kk of D's grid: slab n and t in [0, 1], with the top plane in slab N-1.
inline std::pair<int, double> slab_of(const DomainDiscretization& d, int kk) {
  const int m = d.sub();
  const int n = std::min(kk / m, d.n_layers() - 1);
  return {n, static_cast<double>(kk - n * m) / m};
}

/// psi = (1 - t_n) u_n + t_n u_{n+1} on each slab, same potential.
inline ContinuumConfiguration interpolate_layers(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  ContinuumConfiguration c(st.dom);
  c.A = st.A;
  for (int kk = 0; kk < c.nz(); ++kk) {
    const auto [n, t] = slab_of(d, kk);
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) c.psi(i, j, kk) = (1 - t) * st.u[n](i, j) + t * st.u[n + 1](i, j);
  }
  return c;
}

/// max over D's nodes of |1-|psi|^2 - (1-t)(1-|u_n|^2) - t(1-|u_{n+1}|^2) - t(1-t)|u_n - u_{n+1}|^2|.
inline double interpolation_identity_residual(const LayeredConfiguration& st, const ContinuumConfiguration& c) {
  st.check();
  c.check();
  const auto& d = *st.dom;
  double worst = 0;
  for (int kk = 0; kk < c.nz(); ++kk) {
    const auto [n, t] = slab_of(d, kk);
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) {
        const cplx a = st.u[n](i, j), b = st.u[n + 1](i, j);
        const double lhs = 1 - std::norm(c.psi(i, j, kk));
        const double rhs = (1 - t) * (1 - std::norm(a)) + t * (1 - std::norm(b)) + t * (1 - t) * std::norm(a - b);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
  }
  return worst;
}

// ---------------------------------------------------------------- 2-D energies

struct F2DDecomposition {
  std::vector<double> per_layer;  // F_eps(u_n, A_n), n = 0..N
  double weighted_sum = 0;        // sum_{n<N} s F_eps(u_n, A_n)
};

inline F2DDecomposition f2d_decomposition(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  F2DDecomposition out;
  Accumulator acc;
  for (int n = 0; n < st.layers(); ++n) {
    const double F = gl2d_energy(st.u[n], plane_field(st.A, d, d.layer_k(n), GLMode::restricted_F),
                                 GLMode::restricted_F, p.epsilon);
    out.per_layer.push_back(F);
    if (n < d.n_layers()) acc += p.s * F;
  }
  out.weighted_sum = acc.value();
  return out;
}

struct SliceEnergies {
  std::vector<double> z;
  std::vector<double> per_slice;  // F_eps(psi(., z), A(., z))
  double integral = 0;            // trapezoid rule over [0, L]
};

inline SliceEnergies slice_energies(const ContinuumConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  SliceEnergies out;
  Accumulator acc;
  const int nz = st.nz();
  Array2<cplx> u(d.nx(), d.ny());
  for (int kk = 0; kk < nz; ++kk) {
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) u(i, j) = st.psi(i, j, kk);
    const int k = d.k_bottom() + kk;
    const double F = gl2d_energy(u, plane_field(st.A, d, k, GLMode::restricted_F), GLMode::restricted_F,
                                 d.params().epsilon);
    out.z.push_back(d.z(k));
    out.per_slice.push_back(F);
    acc += d.dz() * detail::wz_end(kk, nz) * F;
  }
  out.integral = acc.value();
  return out;
}

/// josephson + magnetic_exterior + magnetic_mixed_in_D.
inline double theorem2_bundle(const EnergyBreakdown& e) {
  Accumulator a;
  a += e.josephson;
  a += e.magnetic_exterior;
  a += e.magnetic_mixed_in_D;
  return a.value();
}
inline double theorem2_bundle(const LayeredConfiguration& st) { return theorem2_bundle(ld_energy(st)); }

// ---------------------------------------------------------------- kappa scaling

enum class KappaDirection { to_kappa, from_kappa };

namespace detail {

inline void scale_potential(Potential3D& A, double f) {
  for (auto* arr : {&A.a1, &A.a2, &A.a3})
    for (double& v : arr->data()) v *= f;
  A.h_ex *= f;
}

inline double kappa_of(const DomainDiscretization& d) { return 1 / d.params().epsilon; }

}  // namespace detail

/// u unchanged, A -> A / kappa (and h_ex -> h_ex / kappa), kappa = 1/eps; from_kappa inverts.
inline LayeredConfiguration rescale_kappa(const LayeredConfiguration& st, KappaDirection dir) {
  st.check();
  LayeredConfiguration out = st;
  const double k = detail::kappa_of(*st.dom);
  detail::scale_potential(out.A, dir == KappaDirection::to_kappa ? 1 / k : k);
  return out;
}

inline ContinuumConfiguration rescale_kappa(const ContinuumConfiguration& st, KappaDirection dir) {
  st.check();
  ContinuumConfiguration out = st;
  const double k = detail::kappa_of(*st.dom);
  detail::scale_potential(out.A, dir == KappaDirection::to_kappa ? 1 / k : k);
  return out;
}

namespace detail {

/// int |curl A - H|^2 over the box, with the same dual-volume split as the energy.
inline void kappa_magnetic(const DomainDiscretization& d, const Potential3D& A, EnergyBreakdown& e) {
  const double hx = A.hx, hy = A.hy, dz = A.dz, half = 0.5 * hx * hy * dz;
  Accumulator in3, ext, mix;
  auto split = [&](bool has_lo, bool lo_in, bool has_hi, bool hi_in, double& vin, double& vout) {
    vin = vout = 0;
    if (has_lo) (lo_in ? vin : vout) += half;
    if (has_hi) (hi_in ? vin : vout) += half;
  };
  double vin, vout;
  for (int k = 0; k < A.NZ; ++k)
    for (int j = 0; j < A.NY - 1; ++j)
      for (int i = 0; i < A.NX - 1; ++i) {
        const double r = (A.a2(i + 1, j, k) - A.a2(i, j, k)) / hx - (A.a1(i, j + 1, k) - A.a1(i, j, k)) / hy - A.h_ex;
        split(k > 0, k > 0 && d.cell_in_D(i, j, k - 1), k < A.NZ - 1, k < A.NZ - 1 && d.cell_in_D(i, j, k), vin, vout);
        in3 += vin * r * r;
        ext += vout * r * r;
      }
  for (int k = 0; k < A.NZ - 1; ++k)
    for (int j = 0; j < A.NY - 1; ++j)
      for (int i = 0; i < A.NX; ++i) {
        const double c = (A.a3(i, j + 1, k) - A.a3(i, j, k)) / hy - (A.a2(i, j, k + 1) - A.a2(i, j, k)) / dz;
        split(i > 0, i > 0 && d.cell_in_D(i - 1, j, k), i < A.NX - 1, i < A.NX - 1 && d.cell_in_D(i, j, k), vin, vout);
        mix += vin * c * c;
        ext += vout * c * c;
      }
  for (int k = 0; k < A.NZ - 1; ++k)
    for (int j = 0; j < A.NY; ++j)
      for (int i = 0; i < A.NX - 1; ++i) {
        const double c = (A.a1(i, j, k + 1) - A.a1(i, j, k)) / dz - (A.a3(i + 1, j, k) - A.a3(i, j, k)) / hx;
        split(j > 0, j > 0 && d.cell_in_D(i, j - 1, k), j < A.NY - 1, j < A.NY - 1 && d.cell_in_D(i, j, k), vin, vout);
        mix += vin * c * c;
        ext += vout * c * c;
      }
  e.magnetic_in_D = in3.value();
  e.magnetic_exterior = ext.value();
  e.magnetic_mixed_in_D = mix.value();
}

/// fac * sum over Omega links |(1/kappa) (u_h e^{-i kappa h a} - u_t) / h|^2, trapezoid link weights.
inline void kappa_plane_kinetic(const Array2<cplx>& u, const Potential3D& A, const DomainDiscretization& d, int k,
                                double kappa, double fac, Accumulator& acc) {
  const int nx = d.nx(), ny = d.ny(), px = d.px(), py = d.py();
  const double hx = d.hx(), hy = d.hy();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i) {
      const cplx z = (u(i + 1, j) * std::polar(1.0, -kappa * hx * A.a1(px + i, py + j, k)) - u(i, j)) / (kappa * hx);
      acc += fac * hx * hy * DomainDiscretization::edge_weight(j, ny) * std::norm(z);
    }
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      const cplx z = (u(i, j + 1) * std::polar(1.0, -kappa * hy * A.a2(px + i, py + j, k)) - u(i, j)) / (kappa * hy);
      acc += fac * hx * hy * DomainDiscretization::edge_weight(i, nx) * std::norm(z);
    }
}

inline void kappa_plane_potential(const Array2<cplx>& u, const DomainDiscretization& d, double fac, Accumulator& acc) {
  for (int j = 0; j < d.ny(); ++j)
    for (int i = 0; i < d.nx(); ++i) {
      const double q = 1 - std::norm(u(i, j));
      acc += fac * d.w_node(i, j) * 0.5 * q * q;
    }
}

}  // namespace detail

/// LD energy in the kappa convention of a state produced by rescale_kappa(., to_kappa):
/// sum_n s int |(1/kappa) grad u_n - i A u_n|^2 + (1/2)(1-|u_n|^2)^2
/// + sum_n 1/(kappa^2 lambda^2 s) int |u_{n+1} - u_n e^{i kappa int A3}|^2 + int |curl A - H|^2.
inline EnergyBreakdown ld_energy_kappa(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  const double kappa = detail::kappa_of(d);
  Accumulator kin, pot, jos;
  for (int n = 0; n < st.layers(); ++n) {
    detail::kappa_plane_kinetic(st.u[n], st.A, d, d.layer_k(n), kappa, p.s, kin);
    detail::kappa_plane_potential(st.u[n], d, p.s, pot);
  }
  const double cj = 1 / (kappa * kappa * p.lambda * p.lambda * p.s);
  for (int n = 0; n < d.n_layers(); ++n) {
    const int k0 = d.layer_k(n);
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) {
        double phi = 0;
        for (int k = k0; k < k0 + d.sub(); ++k) phi += st.A.a3(d.px() + i, d.py() + j, k) * d.dz();
        jos += cj * d.w_node(i, j) * std::norm(st.u[n + 1](i, j) - st.u[n](i, j) * std::polar(1.0, kappa * phi));
      }
  }
  EnergyBreakdown e;
  e.layer_kinetic = kin.value();
  e.gl_potential = pot.value();
  e.josephson = jos.value();
  detail::kappa_magnetic(d, st.A, e);
  e.finish();
  e.precise_total = e.total;
  return e;
}

/// AGL energy in the kappa convention:
/// int |(1/kappa) grad' psi - i A' psi|^2 + (1/lambda^2)|(1/kappa) d3 psi - i A3 psi|^2
/// + (1/2)(1-|psi|^2)^2 + int |curl A - H|^2.
inline EnergyBreakdown agl_energy_kappa(const ContinuumConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  const double kappa = detail::kappa_of(d), dz = d.dz();
  const int nz = st.nz();
  Accumulator kin, pot, ver;
  Array2<cplx> u(d.nx(), d.ny());
  for (int kk = 0; kk < nz; ++kk) {
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) u(i, j) = st.psi(i, j, kk);
    const double fac = dz * detail::wz_end(kk, nz);
    detail::kappa_plane_kinetic(u, st.A, d, d.k_bottom() + kk, kappa, fac, kin);
    detail::kappa_plane_potential(u, d, fac, pot);
  }
  const double il2 = 1 / (p.lambda * p.lambda);
  for (int kk = 0; kk + 1 < nz; ++kk)
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) {
        const double a = st.A.a3(d.px() + i, d.py() + j, d.k_bottom() + kk);
        const cplx z = (st.psi(i, j, kk + 1) * std::polar(1.0, -kappa * dz * a) - st.psi(i, j, kk)) / (kappa * dz);
        ver += il2 * d.w_node(i, j) * dz * std::norm(z);
      }
  EnergyBreakdown e;
  e.layer_kinetic = kin.value();
  e.gl_potential = pot.value();
  e.josephson = ver.value();
  detail::kappa_magnetic(d, st.A, e);
  e.finish();
  e.precise_total = e.total;
  return e;
}

// ---------------------------------------------------------------- interpolation comparison

/// Measured quantities of the layer-to-continuum comparison and a bound with
/// agl_energy(interpolate_layers(x)) <= ld_energy(x) (1 + bound).
struct ComparisonBound {
  double ld_total = 0, agl_interpolated = 0;
  double end_layer_excess = 0;  // (s/2) (kinetic + potential) of layers 0 and N
  double kinetic_extra = 0, potential_extra = 0, vertical_extra = 0;
  double bound = 0;
  // global surrogates
  double a3_l6_sq = 0;       // ||A3||_{L6(D)}^2
  double a3_l4_4 = 0;        // int_D (A3)^4
  double a3_l2 = 0;          // ||A3||_{L2(D)}
  double d3_a3_l2 = 0;       // ||d3 A3||_{L2(D)}
  double layer_quartic = 0;  // sum_n (1/s) int |u_{n+1} - u_n|^4
  double layer_diff2 = 0;    // sum_n (1/s) int |u_{n+1} - u_n|^2

  double gap() const { return agl_interpolated - ld_total; }
  bool holds(double tol = 0) const { return agl_interpolated <= ld_total * (1 + bound) + tol; }

  nlohmann::json to_json() const {
    return {{"ld_total", ld_total},           {"agl_interpolated", agl_interpolated},
            {"gap", gap()},                   {"end_layer_excess", end_layer_excess},
            {"kinetic_extra", kinetic_extra}, {"potential_extra", potential_extra},
            {"vertical_extra", vertical_extra}, {"bound", bound},
            {"a3_l6_sq", a3_l6_sq},           {"a3_l4_4", a3_l4_4},
            {"a3_l2", a3_l2},                 {"d3_a3_l2", d3_a3_l2},
            {"layer_quartic", layer_quartic}, {"layer_diff2", layer_diff2}};
  }
};

/// ||A3||^2_{L6(D)} from z-link values weighted by node area times dz.
inline double a3_l6_norm_sq(const LayeredConfiguration& st) {
  const auto& d = *st.dom;
  Accumulator acc;
  for (int k = d.k_bottom(); k < d.k_top(); ++k)
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) acc += d.w_node(i, j) * d.dz() * std::pow(st.A.a3(d.px() + i, d.py() + j, k), 6);
  return std::cbrt(acc.value());
}

/// sum_n (1/s) int_Omega |u_{n+1} - u_n|^4.
inline double layer_quartic_sum(const LayeredConfiguration& st) {
  const auto& d = *st.dom;
  Accumulator acc;
  for (int n = 0; n < d.n_layers(); ++n)
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) {
        const double q = std::norm(st.u[n + 1](i, j) - st.u[n](i, j));
        acc += d.w_node(i, j) * q * q / d.s();
      }
  return acc.value();
}

inline ComparisonBound comparison_bound(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  const auto& A = st.A;
  const int nx = d.nx(), ny = d.ny(), px = d.px(), py = d.py(), m = d.sub(), N = d.n_layers();
  const double hx = d.hx(), hy = d.hy(), dz = d.dz(), s = p.s, eps = p.epsilon;
  const double il2 = 1 / (p.lambda * p.lambda);
  ComparisonBound b;
  const EnergyBreakdown ld = ld_energy(st);
  b.ld_total = ld.total;
  b.agl_interpolated = agl_energy(interpolate_layers(st)).total;

  // end layers: the continuum has half their in-plane weight
  for (int n : {0, N}) {
    const double F = gl2d_energy(st.u[n], plane_field(A, d, d.layer_k(n), GLMode::restricted_F), GLMode::restricted_F, eps);
    double mag = 0;
    const auto c = plane_curl(layer_links(A, d, d.layer_k(n)));
    for (double v : c.data()) mag += 0.5 * hx * hy * (v - A.h_ex) * (v - A.h_ex);
    b.end_layer_excess += 0.5 * s * (F - mag);
  }

  // in-plane kinetic: |D_k u| <= |D_{k_n} u| + |u_h| |P_k - P_{k_n}| / h on every link of plane k
  Accumulator kin;
  const int nz = N * m + 1;
  for (int kk = 0; kk < nz; ++kk) {
    const auto [n, t] = slab_of(d, kk);
    const int k = d.k_bottom() + kk;
    const double fz = dz * detail::wz_end(kk, nz);
    auto side = [&](double wt, double W, cplx ut, cplx uh, double h, double ak, double an) {
      const cplx X = (uh * link_phase(h, an) - ut) / h;
      const double del = std::abs(uh) * std::abs(link_phase(h, ak) - link_phase(h, an)) / h;
      kin += 0.5 * W * wt * (2 * std::abs(X) * del + del * del);
    };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx - 1; ++i) {
        const double W = fz * hx * hy * DomainDiscretization::edge_weight(j, ny);
        const double ak = A.a1(px + i, py + j, k);
        for (int q = 0; q < 2; ++q) {
          const int l = n + q;
          side(q ? t : 1 - t, W, st.u[l](i, j), st.u[l](i + 1, j), hx, ak, A.a1(px + i, py + j, d.layer_k(l)));
        }
      }
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx; ++i) {
        const double W = fz * hx * hy * DomainDiscretization::edge_weight(i, nx);
        const double ak = A.a2(px + i, py + j, k);
        for (int q = 0; q < 2; ++q) {
          const int l = n + q;
          side(q ? t : 1 - t, W, st.u[l](i, j), st.u[l](i, j + 1), hy, ak, A.a2(px + i, py + j, d.layer_k(l)));
        }
      }
  }
  b.kinetic_extra = kin.value();

  // potential: (1-|psi|^2)^2 <= (1+delta)((1-t)a^2 + t b^2) + (1+1/delta) t^2 (1-t)^2 q^2
  Accumulator P, Q;
  const double c4 = 1 / (4 * eps * eps);
  for (int kk = 0; kk < nz; ++kk) {
    const auto [n, t] = slab_of(d, kk);
    const double fz = dz * detail::wz_end(kk, nz);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const cplx u0 = st.u[n](i, j), u1 = st.u[n + 1](i, j);
        const double a = 1 - std::norm(u0), bb = 1 - std::norm(u1), q = std::norm(u0 - u1);
        const double W = fz * d.w_node(i, j) * c4;
        P += W * ((1 - t) * a * a + t * bb * bb);
        Q += W * t * t * (1 - t) * (1 - t) * q * q;
      }
  }
  b.potential_extra = Q.value() + 2 * std::sqrt(std::max(0.0, P.value()) * Q.value());

  // vertical: continuum minus Josephson is (w / (2 lambda^2 dz)) sum_k |x_k - mean x|^2 per node and slab
  Accumulator ver, l4, l2, d3, q4, q2;
  double l6 = 0;
  for (int n = 0; n < N; ++n) {
    const int k0 = d.layer_k(n);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const cplx u0 = st.u[n](i, j), u1 = st.u[n + 1](i, j), du = u1 - u0;
        const double w = d.w_node(i, j);
        double phi_total = 0;
        for (int k = 0; k < m; ++k) phi_total += dz * A.a3(px + i, py + j, k0 + k);
        const double abar = phi_total / s;
        double Vz = 0, Vy = 0, Phi = 0;
        for (int k = 0; k < m; ++k) {
          const double a = A.a3(px + i, py + j, k0 + k);
          const cplx psi = u0 + (static_cast<double>(k) / m) * du;
          const cplx E = link_phase(dz, a);
          const double y = dz * std::abs(u0) * std::abs(a - abar) + dz * (static_cast<double>(k) / m) * std::abs(du) * std::abs(a) +
                           std::abs(psi) * (std::abs(std::polar(1.0, -Phi) - 1.0) * std::abs(E - 1.0) +
                                            std::abs(E - 1.0 + cplx(0, dz * a)));
          Vy += y * y;
          Phi += dz * a;
          Vz += std::norm(du / static_cast<double>(m)) * std::norm(std::polar(1.0, -Phi) - 1.0);
          const double wv = w * dz;
          l4 += wv * a * a * a * a;
          l2 += wv * a * a;
          l6 += wv * std::pow(a, 6);
          if (k + 1 < m || n + 1 < N) {
            const double an = A.a3(px + i, py + j, k0 + k + 1);
            d3 += wv * (an - a) * (an - a) / (dz * dz);
          }
        }
        const double r = std::sqrt(Vz) + std::sqrt(Vy);
        ver += il2 * w / (2 * dz) * r * r;
        q4 += w * std::norm(du) * std::norm(du) / s;
        q2 += w * std::norm(du) / s;
      }
  }
  b.vertical_extra = ver.value();
  b.a3_l6_sq = std::cbrt(l6);
  b.a3_l4_4 = l4.value();
  b.a3_l2 = std::sqrt(l2.value());
  b.d3_a3_l2 = std::sqrt(d3.value());
  b.layer_quartic = q4.value();
  b.layer_diff2 = q2.value();
  const double extra = b.kinetic_extra + b.potential_extra + b.vertical_extra;
  b.bound = b.ld_total > 0 ? extra / b.ld_total : std::numeric_limits<double>::infinity();
  return b;
}

// ---------------------------------------------------------------- report

struct AsymptoticReport {
  double epsilon = 0, s = 0, h_ex = 0, pad = 0;
  double M_eps = 0;
  double total = 0;
  double energy_ratio = 0;
  double josephson_ratio = 0;
  double exterior_ratio = 0;
  double mixed_ratio = 0;
  double trace_deviation_ratio = 0;
  double f2d_sum = 0;
  double f2d_ratio = 0;  // f2d_sum / total
  double agl_ld_gap_ratio = std::numeric_limits<double>::quiet_NaN();
  double avg_vorticity_distance = 0;

  static const std::vector<std::string>& columns() {
    static const std::vector<std::string> c = {"epsilon",         "s",
                                               "h_ex",            "pad",
                                               "M_eps",           "total",
                                               "energy_ratio",    "josephson_ratio",
                                               "exterior_ratio",  "mixed_ratio",
                                               "trace_deviation_ratio", "f2d_sum",
                                               "f2d_ratio",       "agl_ld_gap_ratio",
                                               "avg_vorticity_distance"};
    return c;
  }
  std::vector<double> values() const {
    return {epsilon,     s,           h_ex,     pad,       M_eps,            total,
            energy_ratio, josephson_ratio, exterior_ratio, mixed_ratio, trace_deviation_ratio, f2d_sum,
            f2d_ratio,   agl_ld_gap_ratio, avg_vorticity_distance};
  }
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    const auto v = values();
    for (size_t i = 0; i < v.size(); ++i) {
      if (std::isfinite(v[i]))
        j[columns()[i]] = v[i];
      else
        j[columns()[i]] = nullptr;
    }
    return j;
  }
  static AsymptoticReport from_json(const nlohmann::json& j) {
    AsymptoticReport r;
    double* f[] = {&r.epsilon,        &r.s,           &r.h_ex,           &r.pad,         &r.M_eps,
                   &r.total,          &r.energy_ratio, &r.josephson_ratio, &r.exterior_ratio, &r.mixed_ratio,
                   &r.trace_deviation_ratio, &r.f2d_sum, &r.f2d_ratio, &r.agl_ld_gap_ratio, &r.avg_vorticity_distance};
    for (size_t i = 0; i < columns().size(); ++i) {
      const auto& v = j.at(columns()[i]);
      *f[i] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
    return r;
  }
};

/// Ratios of one LD state against M_eps. agl_total, when given, fills the AGL-LD gap column.
inline AsymptoticReport asymptotic_report(const LayeredConfiguration& st, std::optional<double> agl_total = std::nullopt) {
  st.check();
  const auto& p = st.dom->params();
  AsymptoticReport r;
  r.epsilon = p.epsilon;
  r.s = p.s;
  r.h_ex = p.h_ex;
  r.pad = p.pad;
  r.M_eps = m_epsilon(p);
  const EnergyBreakdown e = ld_energy(st);
  r.total = e.total;
  r.energy_ratio = e.total / r.M_eps;
  r.josephson_ratio = e.josephson / r.M_eps;
  r.exterior_ratio = e.magnetic_exterior / r.M_eps;
  r.mixed_ratio = e.magnetic_mixed_in_D / r.M_eps;
  r.trace_deviation_ratio = trace_deviation(st) / r.M_eps;
  r.f2d_sum = f2d_decomposition(st).weighted_sum;
  r.f2d_ratio = r.f2d_sum / e.total;
  if (agl_total) r.agl_ld_gap_ratio = std::abs(*agl_total - e.total) / r.M_eps;
  r.avg_vorticity_distance = average_vorticity_distance(st);
  return r;
}

/// AGL counterpart: f2d columns hold the slice integral; layer-only columns are NaN.
inline AsymptoticReport asymptotic_report(const ContinuumConfiguration& st) {
  st.check();
  const auto& p = st.dom->params();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  AsymptoticReport r;
  r.epsilon = p.epsilon;
  r.s = p.s;
  r.h_ex = p.h_ex;
  r.pad = p.pad;
  r.M_eps = m_epsilon(p);
  const EnergyBreakdown e = agl_energy(st);
  r.total = e.total;
  r.energy_ratio = e.total / r.M_eps;
  r.josephson_ratio = e.josephson / r.M_eps;
  r.exterior_ratio = e.magnetic_exterior / r.M_eps;
  r.mixed_ratio = e.magnetic_mixed_in_D / r.M_eps;
  r.trace_deviation_ratio = nan;
  r.f2d_sum = slice_energies(st).integral;
  r.f2d_ratio = r.f2d_sum / e.total;
  r.avg_vorticity_distance = nan;
  return r;
}

}  // namespace ldgl
