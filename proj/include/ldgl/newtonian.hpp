#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ldgl/grid.hpp"
#include "ldgl/lattice.hpp"

namespace ldgl {

/// Piecewise-constant density on a cell grid: cell (i, j) is
/// [x0 + i hx, x0 + (i+1) hx] x [y0 + j hy, y0 + (j+1) hy].
struct CellField2 {
  double x0 = 0, y0 = 0, hx = 1, hy = 1;
  Array2<double> v;

  int nx() const { return v.nx(); }
  int ny() const { return v.ny(); }
  Vec2 center(int i, int j) const { return {x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy}; }
};

namespace detail {

// int int log sqrt(x^2 + y^2) dx dy
inline double log_rect_antideriv(double x, double y) {
  const double r2 = x * x + y * y;
  double v = -3 * x * y;
  if (r2 > 0) v += x * y * std::log(r2);
  if (x != 0) v += x * x * std::atan(y / x);
  if (y != 0) v += y * y * std::atan(x / y);
  return 0.5 * v;
}

// int log sqrt(c^2 + t^2) dt
inline double log_line_antideriv(double c, double t) {
  const double r2 = c * c + t * t;
  double v = -2 * t;
  if (r2 > 0) v += t * std::log(r2);
  if (c != 0) v += 2 * c * std::atan(t / c);
  return 0.5 * v;
}

}  // namespace detail

/// phi = Gamma * H with Gamma(x) = log|x| / (2 pi), for piecewise-constant H.
///
/// Cells within `near` cells of the target use exact rectangle integrals of the
/// kernel (and of its gradient); other cells use the midpoint rule. Targets far
/// from the support use a multipole expansion of the same midpoint sum.
class NewtonianPotential {
 public:
  explicit NewtonianPotential(CellField2 H, int near = 2, int order = 40) : H_(std::move(H)), near_(near), order_(order) {
    const int nx = H_.nx(), ny = H_.ny();
    c_ = {H_.x0 + 0.5 * nx * H_.hx, H_.y0 + 0.5 * ny * H_.hy};
    const double rs = 0.5 * std::hypot(nx * H_.hx, ny * H_.hy);
    far_ = 2 * rs;
    moments_.assign(order_ + 1, 0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double q = H_.v(i, j) * H_.hx * H_.hy;
        if (q == 0) continue;
        const Vec2 p = H_.center(i, j);
        const std::complex<double> w(p.x - c_.x, p.y - c_.y);
        std::complex<double> wk = 1;
        for (int k = 0; k <= order_; ++k) {
          moments_[k] += q * wk;
          wk *= w;
        }
      }
  }

  const CellField2& density() const { return H_; }

  double value(Vec2 t) const {
    const std::complex<double> z(t.x - c_.x, t.y - c_.y);
    if (std::abs(z) > far_) {
      std::complex<double> s = moments_[0] * std::log(z), zk = z;
      for (int k = 1; k <= order_; ++k) {
        s -= moments_[k] / (static_cast<double>(k) * zk);
        zk *= z;
      }
      return s.real() / (2 * std::numbers::pi);
    }
    Accumulator acc;
    const int nx = H_.nx(), ny = H_.ny();
    const double hx = H_.hx, hy = H_.hy;
    const double fi = (t.x - H_.x0) / hx - 0.5, fj = (t.y - H_.y0) / hy - 0.5;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double q = H_.v(i, j);
        if (q == 0) continue;
        if (std::abs(i - fi) <= near_ + 0.5 && std::abs(j - fj) <= near_ + 0.5) {
          const double xa = H_.x0 + i * hx - t.x, xb = xa + hx;
          const double ya = H_.y0 + j * hy - t.y, yb = ya + hy;
          using detail::log_rect_antideriv;
          acc += q * (log_rect_antideriv(xb, yb) - log_rect_antideriv(xa, yb) - log_rect_antideriv(xb, ya) +
                      log_rect_antideriv(xa, ya));
        } else {
          const Vec2 p = H_.center(i, j);
          acc += q * hx * hy * 0.5 * std::log((p.x - t.x) * (p.x - t.x) + (p.y - t.y) * (p.y - t.y));
        }
      }
    return acc.value() / (2 * std::numbers::pi);
  }

  Vec2 grad(Vec2 t) const {
    const std::complex<double> z(t.x - c_.x, t.y - c_.y);
    if (std::abs(z) > far_) {
      // f(z) = M0 log z - sum M_k/(k z^k); grad Re f = conj(f')
      std::complex<double> s = moments_[0] / z, zk = z * z;
      for (int k = 1; k <= order_; ++k) {
        s += moments_[k] / zk;
        zk *= z;
      }
      s = std::conj(s) / (2 * std::numbers::pi);
      return {s.real(), s.imag()};
    }
    Accumulator gx, gy;
    const int nx = H_.nx(), ny = H_.ny();
    const double hx = H_.hx, hy = H_.hy;
    const double fi = (t.x - H_.x0) / hx - 0.5, fj = (t.y - H_.y0) / hy - 0.5;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double q = H_.v(i, j);
        if (q == 0) continue;
        if (std::abs(i - fi) <= near_ + 0.5 && std::abs(j - fj) <= near_ + 0.5) {
          // u = t - y ranges over [t.x - xr, t.x - xl] x [t.y - yt, t.y - yb]
          const double xl = H_.x0 + i * hx, xr = xl + hx, yl = H_.y0 + j * hy, yr = yl + hy;
          const double u1a = t.x - xr, u1b = t.x - xl, u2a = t.y - yr, u2b = t.y - yl;
          using detail::log_line_antideriv;
          // d/dt1 of int_{u1a}^{u1b} int_{u2a}^{u2b} log|u| = int_u2 [log|(u1b,u2)| - log|(u1a,u2)|]
          gx += q * (log_line_antideriv(u1b, u2b) - log_line_antideriv(u1b, u2a) - log_line_antideriv(u1a, u2b) +
                     log_line_antideriv(u1a, u2a));
          gy += q * (log_line_antideriv(u2b, u1b) - log_line_antideriv(u2b, u1a) - log_line_antideriv(u2a, u1b) +
                     log_line_antideriv(u2a, u1a));
        } else {
          const Vec2 p = H_.center(i, j);
          const double dx = t.x - p.x, dy = t.y - p.y, r2 = dx * dx + dy * dy;
          gx += q * hx * hy * dx / r2;
          gy += q * hx * hy * dy / r2;
        }
      }
    return {gx.value() / (2 * std::numbers::pi), gy.value() / (2 * std::numbers::pi)};
  }

 private:
  CellField2 H_;
  int near_, order_;
  Vec2 c_;
  double far_ = 0;
  std::vector<std::complex<double>> moments_;
};

/// phi and grad phi sampled at grid nodes.
struct PotentialSamples {
  Array2<double> phi, gx, gy;
};

inline PotentialSamples newtonian_potential(const CellField2& H, const Grid2& g) {
  NewtonianPotential P(H);
  PotentialSamples s{Array2<double>(g.nx, g.ny), Array2<double>(g.nx, g.ny), Array2<double>(g.nx, g.ny)};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 t = g.node(i, j);
      s.phi(i, j) = P.value(t);
      const Vec2 d = P.grad(t);
      s.gx(i, j) = d.x;
      s.gy(i, j) = d.y;
    }
  return s;
}

}  // namespace ldgl
