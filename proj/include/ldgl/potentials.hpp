#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ldgl/domain.hpp"
#include "ldgl/fields.hpp"
#include "ldgl/grid.hpp"
#include "ldgl/newtonian.hpp"

namespace ldgl {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

/// Link currents s (D u, -i u) of one layer: x on x-links, y on y-links.
struct LinkCurrents {
  Array2<double> x;  // (nx-1, ny)
  Array2<double> y;  // (nx, ny-1)
};

/// Current on each link with the gauge-covariant midpoint value of u.
inline LinkCurrents link_currents(const Array2<cplx>& u, const InPlaneLinks& a, double s) {
  const int nx = u.nx(), ny = u.ny();
  const LinkField D = covariant_gradient(u, a);
  LinkCurrents c{Array2<double>(nx - 1, ny), Array2<double>(nx, ny - 1)};
  const cplx mi(0, -1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i) {
      const cplx mid = 0.5 * (u(i, j) + u(i + 1, j) * link_phase(a.hx, a.a1(i, j)));
      c.x(i, j) = s * std::real(std::conj(D.dx(i, j)) * mi * mid);
    }
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i) {
      const cplx mid = 0.5 * (u(i, j) + u(i, j + 1) * link_phase(a.hy, a.a2(i, j)));
      c.y(i, j) = s * std::real(std::conj(D.dy(i, j)) * mi * mid);
    }
  return c;
}

/// h_k^1, h_k^2 as piecewise-constant densities on Omega's cells (layer k),
/// plus the interlayer current j3 on Omega's nodes for each pair (n, n+1).
struct LayerDensity {
  std::vector<CellField2> h1, h2;
  std::vector<Array2<double>> j3;
  std::vector<double> z;  // layer heights
};

inline LayerDensity supercurrent_density(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const auto& p = d.params();
  const int nx = d.nx(), ny = d.ny();
  LayerDensity out;
  for (int n = 0; n < st.layers(); ++n) {
    const auto c = link_currents(st.u[n], layer_links(st.A, d, d.layer_k(n)), p.s);
    CellField2 f1{0, 0, d.hx(), d.hy(), Array2<double>(nx - 1, ny - 1)}, f2 = f1;
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx - 1; ++i) {
        f1.v(i, j) = 0.5 * (c.x(i, j) + c.x(i, j + 1));
        f2.v(i, j) = 0.5 * (c.y(i, j) + c.y(i + 1, j));
      }
    out.h1.push_back(std::move(f1));
    out.h2.push_back(std::move(f2));
    out.z.push_back(d.layer_z(n));
  }
  const double cj = 1.0 / (p.lambda * p.lambda * p.s);
  for (int n = 0; n + 1 < st.layers(); ++n) {
    const Array2<double> phi = vertical_link_phase(st.A, d, n);
    Array2<double> j(nx, ny);
    for (int jj = 0; jj < ny; ++jj)
      for (int i = 0; i < nx; ++i)
        j(i, jj) = cj * std::imag(std::conj(st.u[n](i, jj) * std::polar(1.0, phi(i, jj))) * st.u[n + 1](i, jj));
    out.j3.push_back(std::move(j));
  }
  return out;
}

namespace detail {

// F(X, Y) with d2F/dXdY = 1/sqrt(X^2 + Y^2 + Z^2)
inline double inv_r_rect_antideriv(double X, double Y, double Z) {
  const double X2 = X * X, Y2 = Y * Y, Z2 = Z * Z;
  double v = 0;
  if (X != 0) v += X * std::asinh(Y / std::sqrt(X2 + Z2));
  if (Y != 0) v += Y * std::asinh(X / std::sqrt(Y2 + Z2));
  if (Z != 0) v -= Z * std::atan(X * Y / (Z * std::sqrt(X2 + Y2 + Z2)));
  return v;
}

}  // namespace detail

/// S_k(g)(x) = c int g(y) / |x - (y, z_k)| dy, c = -1/(4 pi), for one or more
/// piecewise-constant densities sharing a cell grid on the plane z = z_k.
///
/// Every cell is integrated exactly (corner antiderivatives collected on the
/// nodes), so off the plane the result is the exact potential of the discrete
/// density: harmonic, and symmetric in x3 - z_k bit for bit.
class SingleLayerPotential {
 public:
  static constexpr double c = -0.25 / std::numbers::pi;

  SingleLayerPotential(const std::vector<const CellField2*>& g, double zk) : zk_(zk) {
    if (g.empty()) throw std::invalid_argument("single layer potential needs a density");
    const CellField2& f = *g[0];
    x0_ = f.x0;
    y0_ = f.y0;
    hx_ = f.hx;
    hy_ = f.hy;
    nx_ = f.nx() + 1;
    ny_ = f.ny() + 1;
    for (const CellField2* q : g) {
      require_shape(q->v.same_shape(f.v) && q->x0 == x0_ && q->y0 == y0_ && q->hx == hx_ && q->hy == hy_,
                    "layer densities must share a grid");
      Array2<double> W(nx_, ny_);
      auto at = [&](int i, int j) { return (i < 0 || j < 0 || i >= nx_ - 1 || j >= ny_ - 1) ? 0.0 : q->v(i, j); };
      for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) W(i, j) = at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1);
      W_.push_back(std::move(W));
      Accumulator m;
      for (double v : q->v.data()) m += v * hx_ * hy_;
      mass_.push_back(m.value());
    }
  }
  SingleLayerPotential(const CellField2& g, double zk) : SingleLayerPotential(std::vector<const CellField2*>{&g}, zk) {}

  int count() const { return static_cast<int>(W_.size()); }
  double layer_z() const { return zk_; }
  /// int g over the plane, per density.
  const std::vector<double>& mass() const { return mass_; }

  /// Values of all densities' potentials at x. With on_layer the trace at
  /// (x.x, x.y, z_k) is returned; otherwise x must lie off the plane.
  void eval(const Vec3& x, bool on_layer, double* out) const {
    const double Z = on_layer ? 0.0 : x.z - zk_;
    if (!on_layer && Z == 0) throw std::domain_error("single layer potential evaluated on its layer; use on_layer");
    const int K = count();
    for (int q = 0; q < K; ++q) out[q] = 0;
    for (int j = 0; j < ny_; ++j) {
      const double Y = y0_ + j * hy_ - x.y;
      for (int i = 0; i < nx_; ++i) {
        const double F = detail::inv_r_rect_antideriv(x0_ + i * hx_ - x.x, Y, Z);
        for (int q = 0; q < K; ++q) out[q] += W_[q](i, j) * F;
      }
    }
    for (int q = 0; q < K; ++q) out[q] *= c;
  }

  double value(const Vec3& x, bool on_layer = false) const {
    std::vector<double> v(count());
    eval(x, on_layer, v.data());
    return v[0];
  }

  /// Gradient of the first density's potential at an off-plane point.
  Vec3 grad(const Vec3& x) const {
    const double Z = x.z - zk_;
    if (Z == 0) throw std::domain_error("single layer gradient evaluated on its layer");
    Vec3 g;
    const double Z2 = Z * Z;
    for (int j = 0; j < ny_; ++j) {
      const double Y = y0_ + j * hy_ - x.y;
      for (int i = 0; i < nx_; ++i) {
        const double X = x0_ + i * hx_ - x.x, w = W_[0](i, j);
        if (w == 0) continue;
        const double r = std::sqrt(X * X + Y * Y + Z2);
        // d/dx_target = -d/dX of the corner antiderivative
        g.x -= w * std::asinh(Y / std::sqrt(X * X + Z2));
        g.y -= w * std::asinh(X / std::sqrt(Y * Y + Z2));
        g.z -= w * std::atan(X * Y / (Z * r));
      }
    }
    g.x *= c;
    g.y *= c;
    g.z *= c;
    return g;
  }

 private:
  double zk_, x0_ = 0, y0_ = 0, hx_ = 1, hy_ = 1;
  int nx_ = 0, ny_ = 0;
  std::vector<Array2<double>> W_;
  std::vector<double> mass_;
};

enum class ConeOrientation { up, down, both };

/// Gamma_{R,theta}: |y| < R and angle to e3 below theta.
struct ConeSpec {
  double theta = std::numbers::pi / 4;
  double R = 1.0;
  ConeOrientation orientation = ConeOrientation::both;

  void validate() const {
    if (!(theta > 0 && theta < std::numbers::pi / 2)) throw std::invalid_argument("cone aperture must be in (0, pi/2)");
    if (!(R > 0)) throw std::invalid_argument("cone height must be positive");
  }

  /// Sample offsets from the vertex. Level L uses 16*2^L radii, 8*2^L azimuths and
  /// 4*2^L polar angles; each level contains the previous one.
  std::vector<Vec3> samples(int level = 0) const {
    validate();
    if (level < 0) throw std::invalid_argument("cone sample level must be >= 0");
    const int nr = 16 << level, na = 8 << level, np = 4 << level;
    std::vector<Vec3> pts;
    std::vector<double> signs;
    if (orientation != ConeOrientation::down) signs.push_back(1);
    if (orientation != ConeOrientation::up) signs.push_back(-1);
    for (double sg : signs)
      for (int a = 1; a <= nr; ++a) {
        const double r = R * a / nr;
        pts.push_back({0, 0, sg * r});
        for (int b = 1; b < np; ++b) {
          const double al = theta * b / np;
          for (int q = 0; q < na; ++q) {
            const double ph = 2 * std::numbers::pi * q / na;
            pts.push_back({r * std::sin(al) * std::cos(ph), r * std::sin(al) * std::sin(ph), sg * r * std::cos(al)});
          }
        }
      }
    return pts;
  }
};

/// u*(x) = sup |field| over the cone at (x, z_layer), on the nodes of g.
/// `bounds` = {xlo, xhi, ylo, yhi, zlo, zhi}; a cone leaving it is an error.
inline Array2<double> nontangential_maximal(const std::function<double(const Vec3&)>& field, const Grid2& g,
                                           double z_layer, const ConeSpec& cone, int level,
                                           const std::array<double, 6>& bounds) {
  const auto pts = cone.samples(level);
  const double rad = cone.R * std::sin(cone.theta);
  const double lo = cone.orientation == ConeOrientation::up ? z_layer : z_layer - cone.R;
  const double hi = cone.orientation == ConeOrientation::down ? z_layer : z_layer + cone.R;
  if (g.x0 - rad < bounds[0] || g.x0 + (g.nx - 1) * g.hx + rad > bounds[1] || g.y0 - rad < bounds[2] ||
      g.y0 + (g.ny - 1) * g.hy + rad > bounds[3] || lo < bounds[4] || hi > bounds[5])
    throw std::domain_error("nontangential cone escapes the box");
  Array2<double> u(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 b = g.node(i, j);
      double m = 0;
      for (const Vec3& o : pts) m = std::max(m, std::abs(field({b.x + o.x, b.y + o.y, z_layer + o.z})));
      u(i, j) = m;
    }
  return u;
}

/// Same on Omega's nodes at layer n, with the box of d as the admissible region.
inline Array2<double> nontangential_maximal(const std::function<double(const Vec3&)>& field,
                                           const DomainDiscretization& d, int n, const ConeSpec& cone = {},
                                           int level = 0) {
  const Grid2 g{0, 0, d.hx(), d.hy(), d.nx(), d.ny()};
  return nontangential_maximal(field, g, d.layer_z(n), cone, level, d.box_bounds());
}

/// Trapezoid L2 norm of a node field over the grid's rectangle.
inline double node_l2(const Array2<double>& f, double hx, double hy) {
  Accumulator a;
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i)
      a += DomainDiscretization::edge_weight(i, f.nx()) * DomainDiscretization::edge_weight(j, f.ny()) * hx * hy *
           f(i, j) * f(i, j);
  return std::sqrt(a.value());
}

inline double cell_l2(const CellField2& f) {
  Accumulator a;
  for (double v : f.v.data()) a += v * v * f.hx * f.hy;
  return std::sqrt(a.value());
}

/// Per-layer L2(Omega) norm of A_n - h_ex a_n - t_n - sum_{k != n} S_k(g_k),
/// both components, at Omega's cell centres.
inline std::vector<double> representation_residual(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const LayerDensity dens = supercurrent_density(st);
  const int L = st.layers(), nx = d.nx(), ny = d.ny();
  std::vector<SingleLayerPotential> S;
  for (int k = 0; k < L; ++k) S.emplace_back(std::vector<const CellField2*>{&dens.h1[k], &dens.h2[k]}, dens.z[k]);
  const double h = d.params().h_ex;
  std::vector<double> out(L);
  for (int n = 0; n < L; ++n) {
    const int kk = d.layer_k(n);
    Accumulator acc;
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx - 1; ++i) {
        const Vec3 x{(i + 0.5) * d.hx(), (j + 0.5) * d.hy(), dens.z[n]};
        const int I = d.px() + i, J = d.py() + j;
        double r1 = 0.5 * (st.A.a1(I, J, kk) + st.A.a1(I, J + 1, kk));
        double r2 = 0.5 * (st.A.a2(I, J, kk) + st.A.a2(I + 1, J, kk)) - h * x.x;
        double v[2];
        for (int k = 0; k < L; ++k) {
          S[k].eval(x, k == n, v);
          r1 -= v[0];
          r2 -= v[1];
        }
        acc += (r1 * r1 + r2 * r2) * d.hx() * d.hy();
      }
    out[n] = std::sqrt(acc.value());
  }
  return out;
}

/// (1/2) sum_n int_{ns}^{(n+1)s} int_Omega |curl A(x, x3) - curl A_n(x)|^2, with
/// the in-plane curl linear in x3 between grid planes.
inline double trace_deviation(const LayeredConfiguration& st) {
  st.check();
  const auto& d = *st.dom;
  const auto& A = st.A;
  const int nx = d.nx(), ny = d.ny(), m = d.sub();
  auto curl = [&](int i, int j, int k) {
    const int I = d.px() + i, J = d.py() + j;
    return (A.a2(I + 1, J, k) - A.a2(I, J, k)) / A.hx - (A.a1(I, J + 1, k) - A.a1(I, J, k)) / A.hy;
  };
  Accumulator acc;
  for (int n = 0; n < d.n_layers(); ++n) {
    const int k0 = d.layer_k(n);
    for (int j = 0; j < ny - 1; ++j)
      for (int i = 0; i < nx - 1; ++i) {
        const double ref = curl(i, j, k0);
        double lo = 0;
        for (int k = k0 + 1; k <= k0 + m; ++k) {
          const double hi = curl(i, j, k) - ref;
          acc += d.dz() / 3 * (lo * lo + lo * hi + hi * hi) * d.hx() * d.hy();
          lo = hi;
        }
      }
  }
  return 0.5 * acc.value();
}

}  // namespace ldgl
