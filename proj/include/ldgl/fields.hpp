#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "ldgl/domain.hpp"
#include "ldgl/grid.hpp"

namespace ldgl {

/// Staggered vector potential on the box grid. Values are per unit length;
/// a1 lives on x-links (NX-1, NY, NZ), a2 on y-links (NX, NY-1, NZ),
/// a3 on z-links (NX, NY, NZ-1).
struct Potential3D {
  int NX = 0, NY = 0, NZ = 0;
  double hx = 1, hy = 1, dz = 1;
  double x0 = 0;     // physical x of node i = 0
  double h_ex = 0;   // applied field of the background h_ex * (0, x, 0)
  Array3<double> a1, a2, a3;

  Potential3D() = default;
  explicit Potential3D(const DomainDiscretization& d)
      : NX(d.NX()), NY(d.NY()), NZ(d.NZ()), hx(d.hx()), hy(d.hy()), dz(d.dz()), x0(d.x(0)),
        h_ex(d.params().h_ex), a1(NX - 1, NY, NZ), a2(NX, NY - 1, NZ), a3(NX, NY, NZ - 1) {}

  double x(int i) const { return x0 + i * hx; }

  static Potential3D zero(const DomainDiscretization& d) { return Potential3D(d); }

  /// h_ex * (0, x1, 0); the y-link line integral of x1 is exact (x constant along it).
  static Potential3D background(const DomainDiscretization& d) {
    Potential3D p(d);
    p.set_background();
    return p;
  }

  void set_background() {
    std::fill(a1.data().begin(), a1.data().end(), 0.0);
    std::fill(a3.data().begin(), a3.data().end(), 0.0);
    for (int k = 0; k < NZ; ++k)
      for (int j = 0; j < NY - 1; ++j)
        for (int i = 0; i < NX; ++i) a2(i, j, k) = h_ex * x(i);
  }

  double bg_a2(int i) const { return h_ex * x(i); }

  bool background_only(double tol = 0.0) const {
    for (double v : a1.data())
      if (std::abs(v) > tol) return false;
    for (double v : a3.data())
      if (std::abs(v) > tol) return false;
    for (int k = 0; k < NZ; ++k)
      for (int j = 0; j < NY - 1; ++j)
        for (int i = 0; i < NX; ++i)
          if (std::abs(a2(i, j, k) - bg_a2(i)) > tol) return false;
    return true;
  }

  bool conforms(const DomainDiscretization& d) const {
    return NX == d.NX() && NY == d.NY() && NZ == d.NZ() && a1.nx() == NX - 1 && a1.ny() == NY &&
           a1.nz() == NZ && a2.nx() == NX && a2.ny() == NY - 1 && a2.nz() == NZ && a3.nx() == NX &&
           a3.ny() == NY && a3.nz() == NZ - 1;
  }

  // Links lying in a face of the box are pinned to the background.
  bool a1_on_boundary(int, int j, int k) const { return j == 0 || j == NY - 1 || k == 0 || k == NZ - 1; }
  bool a2_on_boundary(int i, int, int k) const { return i == 0 || i == NX - 1 || k == 0 || k == NZ - 1; }
  bool a3_on_boundary(int i, int j, int) const { return i == 0 || i == NX - 1 || j == 0 || j == NY - 1; }

  bool operator==(const Potential3D&) const = default;
};

using LayerStack = std::vector<Array2<cplx>>;

struct GaugeFunction {
  Array3<double> g;  // (NX, NY, NZ)

  GaugeFunction() = default;
  explicit GaugeFunction(const DomainDiscretization& d) : g(d.NX(), d.NY(), d.NZ()) {}
};

/// LD state: N+1 layer order parameters on Omega plus the box potential.
struct LayeredConfiguration {
  DomainPtr dom;
  LayerStack u;
  Potential3D A;

  LayeredConfiguration() = default;
  explicit LayeredConfiguration(DomainPtr d, cplx fill = 0.0)
      : dom(d), u(d->n_layers() + 1, Array2<cplx>(d->nx(), d->ny(), fill)), A(Potential3D::background(*d)) {}

  int layers() const { return static_cast<int>(u.size()); }

  void check() const {
    require_shape(dom != nullptr, "configuration without domain");
    require_shape(static_cast<int>(u.size()) == dom->n_layers() + 1, "layer count");
    for (const auto& l : u) require_shape(l.nx() == dom->nx() && l.ny() == dom->ny(), "layer grid");
    require_shape(A.conforms(*dom), "potential grid");
  }
};

/// AGL state: psi on the nodes of D (nx, ny, N*m+1) plus the box potential.
struct ContinuumConfiguration {
  DomainPtr dom;
  Array3<cplx> psi;
  Potential3D A;

  ContinuumConfiguration() = default;
  explicit ContinuumConfiguration(DomainPtr d, cplx fill = 0.0)
      : dom(d), psi(d->nx(), d->ny(), d->k_top() - d->k_bottom() + 1, fill), A(Potential3D::background(*d)) {}

  int nz() const { return psi.nz(); }

  void check() const {
    require_shape(dom != nullptr, "configuration without domain");
    require_shape(psi.nx() == dom->nx() && psi.ny() == dom->ny() &&
                      psi.nz() == dom->k_top() - dom->k_bottom() + 1,
                  "psi grid");
    require_shape(A.conforms(*dom), "potential grid");
  }
};

/// In-plane link values on one plane restricted to the Omega node block.
struct InPlaneLinks {
  Array2<double> a1;  // (nx-1, ny)
  Array2<double> a2;  // (nx, ny-1)
  double hx = 1, hy = 1;
};

/// Covariant link differences: dx on x-links, dy on y-links.
struct LinkField {
  Array2<cplx> dx;
  Array2<cplx> dy;
};

inline InPlaneLinks layer_links(const Potential3D& A, const DomainDiscretization& d, int k) {
  InPlaneLinks l{Array2<double>(d.nx() - 1, d.ny()), Array2<double>(d.nx(), d.ny() - 1), d.hx(), d.hy()};
  const int px = d.px(), py = d.py();
  for (int j = 0; j < d.ny(); ++j)
    for (int i = 0; i < d.nx() - 1; ++i) l.a1(i, j) = A.a1(px + i, py + j, k);
  for (int j = 0; j < d.ny() - 1; ++j)
    for (int i = 0; i < d.nx(); ++i) l.a2(i, j) = A.a2(px + i, py + j, k);
  return l;
}

inline cplx link_phase(double h, double a) { return std::polar(1.0, -h * a); }

inline LinkField covariant_gradient(const Array2<cplx>& u, const InPlaneLinks& a) {
  const int nx = u.nx(), ny = u.ny();
  require_shape(a.a1.nx() == nx - 1 && a.a1.ny() == ny && a.a2.nx() == nx && a.a2.ny() == ny - 1,
                "covariant_gradient links vs field");
  LinkField out{Array2<cplx>(nx - 1, ny), Array2<cplx>(nx, ny - 1)};
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i)
      out.dx(i, j) = (u(i + 1, j) * link_phase(a.hx, a.a1(i, j)) - u(i, j)) / a.hx;
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i)
      out.dy(i, j) = (u(i, j + 1) * link_phase(a.hy, a.a2(i, j)) - u(i, j)) / a.hy;
  return out;
}

/// Plaquette circulation per area. c3: (NX-1, NY-1, NZ) on xy-plaquettes,
/// c1: (NX, NY-1, NZ-1) on yz-plaquettes, c2: (NX-1, NY, NZ-1) on zx-plaquettes.
struct CurlField {
  Array3<double> c1, c2, c3;
};

inline CurlField discrete_curl(const Potential3D& A) {
  const int NX = A.NX, NY = A.NY, NZ = A.NZ;
  require_shape(A.a1.nx() == NX - 1 && A.a2.ny() == NY - 1 && A.a3.nz() == NZ - 1, "discrete_curl");
  CurlField c{Array3<double>(NX, NY - 1, NZ - 1), Array3<double>(NX - 1, NY, NZ - 1),
              Array3<double>(NX - 1, NY - 1, NZ)};
  for (int k = 0; k < NZ; ++k)
    for (int j = 0; j < NY - 1; ++j)
      for (int i = 0; i < NX - 1; ++i)
        c.c3(i, j, k) = (A.a2(i + 1, j, k) - A.a2(i, j, k)) / A.hx - (A.a1(i, j + 1, k) - A.a1(i, j, k)) / A.hy;
  for (int k = 0; k < NZ - 1; ++k)
    for (int j = 0; j < NY - 1; ++j)
      for (int i = 0; i < NX; ++i)
        c.c1(i, j, k) = (A.a3(i, j + 1, k) - A.a3(i, j, k)) / A.hy - (A.a2(i, j, k + 1) - A.a2(i, j, k)) / A.dz;
  for (int k = 0; k < NZ - 1; ++k)
    for (int j = 0; j < NY; ++j)
      for (int i = 0; i < NX - 1; ++i)
        c.c2(i, j, k) = (A.a1(i, j, k + 1) - A.a1(i, j, k)) / A.dz - (A.a3(i + 1, j, k) - A.a3(i, j, k)) / A.hx;
  return c;
}

/// In-plane curl of one plane's Omega links, on Omega's (nx-1, ny-1) cells.
inline Array2<double> plane_curl(const InPlaneLinks& a) {
  const int nx = a.a2.nx(), ny = a.a1.ny();
  Array2<double> c(nx - 1, ny - 1);
  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx - 1; ++i)
      c(i, j) = (a.a2(i + 1, j) - a.a2(i, j)) / a.hx - (a.a1(i, j + 1) - a.a1(i, j)) / a.hy;
  return c;
}

/// Integral of A3 from layer n to layer n+1 at each Omega node.
inline Array2<double> vertical_link_phase(const Potential3D& A, const DomainDiscretization& d, int n) {
  if (n < 0 || n >= d.n_layers()) throw std::out_of_range("vertical_link_phase: layer index out of range");
  Array2<double> phi(d.nx(), d.ny());
  const int k0 = d.layer_k(n), m = d.sub();
  for (int j = 0; j < d.ny(); ++j)
    for (int i = 0; i < d.nx(); ++i) {
      double acc = 0;
      for (int k = k0; k < k0 + m; ++k) acc += A.a3(d.px() + i, d.py() + j, k) * A.dz;
      phi(i, j) = acc;
    }
  return phi;
}

/// A <- A + grad g (link differences of g over link length).
inline void gauge_potential(Potential3D& A, const GaugeFunction& G) {
  const auto& g = G.g;
  require_shape(g.nx() == A.NX && g.ny() == A.NY && g.nz() == A.NZ, "gauge function grid");
  for (int k = 0; k < A.NZ; ++k)
    for (int j = 0; j < A.NY; ++j)
      for (int i = 0; i < A.NX - 1; ++i) A.a1(i, j, k) += (g(i + 1, j, k) - g(i, j, k)) / A.hx;
  for (int k = 0; k < A.NZ; ++k)
    for (int j = 0; j < A.NY - 1; ++j)
      for (int i = 0; i < A.NX; ++i) A.a2(i, j, k) += (g(i, j + 1, k) - g(i, j, k)) / A.hy;
  for (int k = 0; k < A.NZ - 1; ++k)
    for (int j = 0; j < A.NY; ++j)
      for (int i = 0; i < A.NX; ++i) A.a3(i, j, k) += (g(i, j, k + 1) - g(i, j, k)) / A.dz;
}

inline LayeredConfiguration apply_gauge(const LayeredConfiguration& st, const GaugeFunction& G) {
  st.check();
  const auto& d = *st.dom;
  LayeredConfiguration out = st;
  for (int n = 0; n < st.layers(); ++n) {
    const int k = d.layer_k(n);
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i) out.u[n](i, j) *= std::polar(1.0, G.g(d.px() + i, d.py() + j, k));
  }
  gauge_potential(out.A, G);
  return out;
}

inline ContinuumConfiguration apply_gauge(const ContinuumConfiguration& st, const GaugeFunction& G) {
  st.check();
  const auto& d = *st.dom;
  ContinuumConfiguration out = st;
  for (int k = 0; k < st.nz(); ++k)
    for (int j = 0; j < d.ny(); ++j)
      for (int i = 0; i < d.nx(); ++i)
        out.psi(i, j, k) *= std::polar(1.0, G.g(d.px() + i, d.py() + j, d.k_bottom() + k));
  gauge_potential(out.A, G);
  return out;
}

}  // namespace ldgl
