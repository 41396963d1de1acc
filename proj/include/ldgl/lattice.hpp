#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ldgl/bessel.hpp"
#include "ldgl/grid.hpp"

namespace ldgl {

struct Vec2 {
  double x = 0, y = 0;
  bool operator==(const Vec2&) const = default;
};

/// Regular node grid in the plane: node (i, j) at (x0 + i hx, y0 + j hy).
struct Grid2 {
  double x0 = 0, y0 = 0, hx = 1, hy = 1;
  int nx = 0, ny = 0;
  Vec2 node(int i, int j) const { return {x0 + i * hx, y0 + j * hy}; }
};

/// Square vortex lattice b = x0 + a (m, n), a = 1/theta, theta = sqrt(h_ex / 2 pi).
struct LatticeSpec {
  double h_ex = 1;
  double theta = 0;
  double a = 0;
  Vec2 x0;

  LatticeSpec() = default;
  LatticeSpec(double h, Vec2 shift = {}) : h_ex(h), theta(std::sqrt(h / (2 * std::numbers::pi))), a(1 / theta), x0(shift) {
    if (!(h > 0)) throw std::invalid_argument("lattice needs h_ex > 0");
  }

  /// |K_eps| = a^2 = 2 pi / h_ex.
  double cell_area() const { return a * a; }

  bool in_translation_cell(Vec2 p) const { return std::abs(p.x) < a / 2 && std::abs(p.y) < a / 2; }

  /// Offset of p from its nearest lattice point, in [-a/2, a/2)^2.
  Vec2 reduce(Vec2 p) const {
    auto red = [this](double t) { return t - a * std::floor(t / a + 0.5); };
    return {red(p.x - x0.x), red(p.y - x0.y)};
  }

  double nearest_distance(Vec2 p) const {
    const Vec2 r = reduce(p);
    return std::hypot(r.x, r.y);
  }

  /// Lattice points in [-a, wx + a] x [-a, wy + a] (Omega padded by one cell).
  std::vector<Vec2> clipped_points(double wx, double wy) const {
    std::vector<Vec2> pts;
    const int m0 = static_cast<int>(std::floor((-a - x0.x) / a)) - 1, m1 = static_cast<int>(std::ceil((wx + a - x0.x) / a)) + 1;
    const int n0 = static_cast<int>(std::floor((-a - x0.y) / a)) - 1, n1 = static_cast<int>(std::ceil((wy + a - x0.y) / a)) + 1;
    for (int n = n0; n <= n1; ++n)
      for (int m = m0; m <= m1; ++m) {
        const Vec2 b{x0.x + a * m, x0.y + a * n};
        if (b.x >= -a && b.x <= wx + a && b.y >= -a && b.y <= wy + a) pts.push_back(b);
      }
    return pts;
  }

  /// Lattice points strictly inside [0, wx] x [0, wy].
  std::vector<Vec2> points_in(double wx, double wy) const {
    std::vector<Vec2> out;
    for (auto b : clipped_points(wx, wy))
      if (b.x > 0 && b.x < wx && b.y > 0 && b.y < wy) out.push_back(b);
    return out;
  }
};

namespace detail {

/// Bound on sum_{|b| > R} K0(|b|) for lattice spacing a, from K0(r) <= sqrt(pi/2r) e^-r.
inline double k0_tail_bound(double a, double R) {
  if (R <= 0) return INFINITY;
  const double g = std::sqrt(R) * std::exp(-R) + 0.5 * std::sqrt(std::numbers::pi) * std::erfc(std::sqrt(R));
  return 2 * std::numbers::pi / (a * a) * std::sqrt(std::numbers::pi / 2) * g;
}

/// 4-point Lagrange weights at fractional position t in [0,1) for nodes -1, 0, 1, 2.
inline std::array<double, 4> lagrange4(double t) {
  return {-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2, -(t + 1) * t * (t - 2) / 2, (t + 1) * t * (t - 1) / 6};
}

}  // namespace detail

/// Periodic lattice field h(x) = sum_b K0(|x - b|) and its gradient.
///
/// exact(): direct sum over lattice points within the truncation radius.
/// fast(): the nine nearest terms exactly plus a tabulated smooth remainder
/// (4-point Lagrange interpolation); used to rank translation candidates.
class LatticeField {
 public:
  struct Sample {
    double h;
    Vec2 grad;
  };

  LatticeField(const LatticeSpec& spec, double tol = 1e-10, int table_n = 32) : spec_(spec), tol_(tol), tn_(table_n) {
    const double a = spec_.a;
    R_ = a;
    while (detail::k0_tail_bound(a, R_ - a) > tol_) R_ += 0.25 * a;
    if (tn_ > 0) build_table();
  }

  const LatticeSpec& spec() const { return spec_; }
  double truncation_radius() const { return R_; }
  double tolerance() const { return tol_; }
  void set_shift(Vec2 x0) { spec_.x0 = x0; }

  /// Exact truncated sum at physical point p.
  Sample exact(Vec2 p) const {
    const Vec2 y = spec_.reduce(p);
    check_off_lattice(y);
    return sum_about(y, false);
  }

  bool has_table() const { return tn_ > 0; }

  Sample fast(Vec2 p) const {
    if (tn_ <= 0) throw std::logic_error("lattice field built without remainder table");
    const Vec2 y = spec_.reduce(p);
    check_off_lattice(y);
    Sample s = sum_near(y);
    const double a = spec_.a, d = a / tn_;
    const double fx = (y.x + a / 2 + d) / d, fy = (y.y + a / 2 + d) / d;
    int ix = static_cast<int>(std::floor(fx)), iy = static_cast<int>(std::floor(fy));
    ix = std::clamp(ix, 1, tn_);
    iy = std::clamp(iy, 1, tn_);
    const auto wx = detail::lagrange4(fx - ix), wy = detail::lagrange4(fy - iy);
    for (int q = 0; q < 4; ++q)
      for (int p2 = 0; p2 < 4; ++p2) {
        const size_t id = idx(ix - 1 + p2, iy - 1 + q);
        const double w = wx[p2] * wy[q];
        s.h += w * rh_[id];
        s.grad.x += w * rx_[id];
        s.grad.y += w * ry_[id];
      }
    return s;
  }

 private:
  void check_off_lattice(Vec2 y) const {
    if (std::hypot(y.x, y.y) < 1e-13 * spec_.a) throw std::domain_error("lattice field evaluated on a lattice point");
  }

  // terms with |m|,|n| <= 1 around the reduced offset y
  Sample sum_near(Vec2 y) const {
    Sample s{0, {0, 0}};
    const double a = spec_.a;
    for (int n = -1; n <= 1; ++n)
      for (int m = -1; m <= 1; ++m) add_term(s, y.x - m * a, y.y - n * a);
    return s;
  }

  Sample sum_about(Vec2 y, bool skip_near) const {
    Sample s{0, {0, 0}};
    const double a = spec_.a, R2 = R_ * R_;
    const int n0 = static_cast<int>(std::ceil((y.y - R_) / a)), n1 = static_cast<int>(std::floor((y.y + R_) / a));
    for (int n = n0; n <= n1; ++n) {
      const double dy = y.y - n * a, w2 = R2 - dy * dy;
      if (w2 < 0) continue;
      const double w = std::sqrt(w2);
      const int m0 = static_cast<int>(std::ceil((y.x - w) / a)), m1 = static_cast<int>(std::floor((y.x + w) / a));
      for (int m = m0; m <= m1; ++m) {
        if (skip_near && std::abs(m) <= 1 && std::abs(n) <= 1) continue;
        const double dx = y.x - m * a;
        if (dx * dx + dy * dy > R2) continue;
        add_term(s, dx, dy);
      }
    }
    return s;
  }

  static void add_term(Sample& s, double dx, double dy) {
    const double r = std::sqrt(dx * dx + dy * dy);
    double k0, k1;
    bessel_k01(r, k0, k1);
    s.h += k0;
    k1 /= r;
    s.grad.x -= k1 * dx;
    s.grad.y -= k1 * dy;
  }

  size_t idx(int i, int j) const { return static_cast<size_t>(j) * (tn_ + 3) + i; }

  void build_table() {
    const int n = tn_ + 3;
    rh_.assign(static_cast<size_t>(n) * n, 0);
    rx_ = rh_;
    ry_ = rh_;
    const double a = spec_.a, d = a / tn_;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec2 y{-a / 2 - d + i * d, -a / 2 - d + j * d};
        const Sample s = sum_about(y, true);
        rh_[idx(i, j)] = s.h;
        rx_[idx(i, j)] = s.grad.x;
        ry_[idx(i, j)] = s.grad.y;
      }
  }

  LatticeSpec spec_;
  double tol_;
  int tn_;
  double R_ = 0;
  std::vector<double> rh_, rx_, ry_;
};

/// h_eps sampled on grid nodes; throws if a node sits on a lattice point.
inline Array2<double> lattice_field_h(const Grid2& g, const LatticeSpec& spec, double tol = 1e-10) {
  LatticeField f(spec, tol, 0);
  Array2<double> h(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) h(i, j) = f.exact(g.node(i, j)).h;
  return h;
}

/// 0 within eps of a lattice point, |x - b|/eps - 1 on the ramp, 1 beyond 2 eps.
inline double rho_profile(double r, double eps) {
  if (r <= eps) return 0;
  if (r >= 2 * eps) return 1;
  return r / eps - 1;
}

inline void check_cores_disjoint(const LatticeSpec& spec, double eps) {
  if (!(eps < spec.a / 4)) throw std::invalid_argument("vortex cores overlap: epsilon must be below a quarter lattice cell");
}

inline Array2<double> vortex_profile_rho(const Grid2& g, const LatticeSpec& spec, double eps) {
  check_cores_disjoint(spec, eps);
  Array2<double> r(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) r(i, j) = rho_profile(spec.nearest_distance(g.node(i, j)), eps);
  return r;
}

}  // namespace ldgl
