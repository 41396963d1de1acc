#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldgl/grid.hpp"

namespace ldgl {

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MeshSpec {
  int nx = 33;       // in-plane nodes across Omega (x)
  int ny = 33;       // in-plane nodes across Omega (y)
  double dz = 0.125; // vertical spacing; must divide the interlayer distance
  bool operator==(const MeshSpec&) const = default;
};

/// Physical and discretization parameters of one run.
struct ModelParams {
  double epsilon = 0.1;
  double s = 0.25;
  int n_layers = 4;  // N; there are N+1 layers
  double height = 1.0;
  double lambda = 1.0;
  double h_ex = 10.0;
  double wx = 1.0;
  double wy = 1.0;
  double pad = 0.25;
  MeshSpec mesh;

  /// Convenience: sets s = height / n_layers.
  static ModelParams layered(double epsilon, double height, int n_layers, double h_ex) {
    ModelParams p;
    p.epsilon = epsilon;
    p.height = height;
    p.n_layers = n_layers;
    p.s = height / n_layers;
    p.h_ex = h_ex;
    return p;
  }

  double omega_area() const { return wx * wy; }
  double volume() const { return wx * wy * height; }
  double diam_omega() const { return std::hypot(wx, wy); }
  double hx() const { return wx / (mesh.nx - 1); }
  double hy() const { return wy / (mesh.ny - 1); }

  void validate() const {
    auto fail = [](const std::string& m) { throw ParamError(m); };
    if (!(epsilon > 0)) fail("epsilon must be positive");
    if (!(s > 0)) fail("s must be positive");
    if (!(height > 0)) fail("height must be positive");
    if (!(lambda > 0)) fail("lambda must be positive");
    if (!(h_ex >= 0) || !std::isfinite(h_ex)) fail("h_ex must be finite and nonnegative");
    if (!(wx > 0) || !(wy > 0)) fail("omega extent must be positive");
    if (!(pad >= 0)) fail("pad must be nonnegative");
    if (n_layers < 1) fail("n_layers must be >= 1");
    if (std::abs(s * n_layers - height) > 1e-12 * height) {
      std::ostringstream os;
      os << "s*N = " << s * n_layers << " does not match height " << height;
      fail(os.str());
    }
    if (mesh.nx < 2 || mesh.ny < 2) fail("mesh needs at least 2 nodes per direction");
    if (!(mesh.dz > 0)) fail("mesh.dz must be positive");
  }

  /// Grid guard for runs that must resolve the vortex core.
  void check_resolution() const {
    const double h = std::max(hx(), hy());
    if (h > epsilon / 2 * (1 + 1e-12)) {
      std::ostringstream os;
      os << "in-plane spacing " << h << " exceeds epsilon/2 = " << epsilon / 2;
      throw ParamError(os.str());
    }
  }

  bool operator==(const ModelParams&) const = default;
};

/// Discretization of the padded box around D = Omega x [0, L].
///
/// The box grid has NX x NY x NZ nodes. Omega's nodes are the box nodes
/// [px, px+nx) x [py, py+ny); layer n lives on box plane layer_k(n).
class DomainDiscretization {
 public:
  explicit DomainDiscretization(const ModelParams& p) : params_(p) {
    p.validate();
    nx_ = p.mesh.nx;
    ny_ = p.mesh.ny;
    hx_ = p.hx();
    hy_ = p.hy();
    const double ratio = p.s / p.mesh.dz;
    m_ = static_cast<int>(std::lround(ratio));
    if (m_ < 1 || std::abs(m_ * p.mesh.dz - p.s) > 1e-9 * p.s) {
      std::ostringstream os;
      os << "vertical spacing " << p.mesh.dz << " does not divide s = " << p.s;
      throw ParamError(os.str());
    }
    dz_ = p.s / m_;
    px_ = cells_for(p.pad, hx_);
    py_ = cells_for(p.pad, hy_);
    pz_ = cells_for(p.pad, dz_);
    NX_ = nx_ + 2 * px_;
    NY_ = ny_ + 2 * py_;
    NZ_ = p.n_layers * m_ + 1 + 2 * pz_;

    w_node_ = Array2<double>(nx_, ny_);
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) w_node_(i, j) = hx_ * hy_ * edge_weight(i, nx_) * edge_weight(j, ny_);
  }

  const ModelParams& params() const { return params_; }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int NX() const { return NX_; }
  int NY() const { return NY_; }
  int NZ() const { return NZ_; }
  int px() const { return px_; }
  int py() const { return py_; }
  int pz() const { return pz_; }
  int sub() const { return m_; }  // vertical cells per interlayer gap
  int n_layers() const { return params_.n_layers; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double dz() const { return dz_; }
  double s() const { return params_.s; }

  double x(int i) const { return (i - px_) * hx_; }
  double y(int j) const { return (j - py_) * hy_; }
  double z(int k) const { return (k - pz_) * dz_; }
  double layer_z(int n) const { return n * params_.s; }
  int layer_k(int n) const { return pz_ + n * m_; }
  int k_bottom() const { return layer_k(0); }
  int k_top() const { return layer_k(params_.n_layers); }

  /// Trapezoid weight of an Omega node (cell-area share); sums to |Omega|.
  double w_node(int i, int j) const { return w_node_(i, j); }
  const Array2<double>& node_weights() const { return w_node_; }

  /// 1/2 at the two ends of [0, n), 1 elsewhere.
  static double edge_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

  bool node_in_omega(int i, int j) const {
    return i >= px_ && i < px_ + nx_ && j >= py_ && j < py_ + ny_;
  }
  bool cell_in_omega(int ci, int cj) const {
    return ci >= px_ && ci < px_ + nx_ - 1 && cj >= py_ && cj < py_ + ny_ - 1;
  }
  /// 3-D cell (ci, cj, ck) spans nodes ci..ci+1 etc.
  bool cell_in_D(int ci, int cj, int ck) const {
    return cell_in_omega(ci, cj) && ck >= k_bottom() && ck < k_top();
  }
  bool cell_exists(int ci, int cj, int ck) const {
    return ci >= 0 && ci < NX_ - 1 && cj >= 0 && cj < NY_ - 1 && ck >= 0 && ck < NZ_ - 1;
  }
  double cell_volume() const { return hx_ * hy_ * dz_; }

  /// 1 for cells in D, 0 for B_pad \ D.
  Array3<std::uint8_t> cell_mask() const {
    Array3<std::uint8_t> m(NX_ - 1, NY_ - 1, NZ_ - 1, 0);
    for (int k = 0; k < NZ_ - 1; ++k)
      for (int j = 0; j < NY_ - 1; ++j)
        for (int i = 0; i < NX_ - 1; ++i) m(i, j, k) = cell_in_D(i, j, k) ? 1 : 0;
    return m;
  }

  /// Box extent [lo, hi] per axis.
  std::array<double, 6> box_bounds() const {
    return {x(0), x(NX_ - 1), y(0), y(NY_ - 1), z(0), z(NZ_ - 1)};
  }

 private:
  static int cells_for(double pad, double h) {
    if (pad <= 0) return 0;
    return static_cast<int>(std::ceil(pad / h - 1e-9));
  }

  ModelParams params_;
  int nx_ = 0, ny_ = 0, NX_ = 0, NY_ = 0, NZ_ = 0;
  int px_ = 0, py_ = 0, pz_ = 0, m_ = 1;
  double hx_ = 0, hy_ = 0, dz_ = 0;
  Array2<double> w_node_;
};

/// Leading-order energy M_eps = |D|/2 h_ex ln(1/(eps sqrt(h_ex))); needs eps sqrt(h_ex) < 1.
inline double m_epsilon(const ModelParams& p) {
  const double q = p.epsilon * std::sqrt(p.h_ex);
  if (!(p.h_ex > 0) || !(q < 1)) throw ParamError("M_eps needs h_ex > 0 and eps*sqrt(h_ex) < 1");
  return 0.5 * p.volume() * p.h_ex * std::log(1 / q);
}

using DomainPtr = std::shared_ptr<const DomainDiscretization>;

inline DomainPtr build_domain(const ModelParams& p) { return std::make_shared<const DomainDiscretization>(p); }

}  // namespace ldgl
