#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "ldgl/domain.hpp"
#include "ldgl/fields.hpp"

namespace ldgl {

/// Deterministic generator used for every seeded quantity.
using Rng = std::mt19937_64;

inline double uniform(Rng& r, double a, double b) {
  // explicit mapping keeps streams identical across standard libraries
  const double t = static_cast<double>(r() >> 11) * 0x1.0p-53;
  return a + (b - a) * t;
}

/// Sum of a few random plane waves; smooth on the unit scale.
struct SmoothField {
  struct Mode {
    double kx, ky, kz, ph, amp;
  };
  std::vector<Mode> modes;

  SmoothField() = default;
  SmoothField(Rng& r, int n, double amp, double kmax = 2 * std::numbers::pi) {
    for (int m = 0; m < n; ++m)
      modes.push_back({uniform(r, -kmax, kmax), uniform(r, -kmax, kmax), uniform(r, -kmax, kmax),
                       uniform(r, 0, 2 * std::numbers::pi), uniform(r, -amp, amp)});
  }
  double operator()(double x, double y, double z = 0) const {
    double v = 0;
    for (const auto& m : modes) v += m.amp * std::sin(m.kx * x + m.ky * y + m.kz * z + m.ph);
    return v;
  }
};

inline void perturb_potential(Potential3D& A, const DomainDiscretization& d, Rng& r, double amp) {
  SmoothField f1(r, 3, amp), f2(r, 3, amp), f3(r, 3, amp);
  for (int k = 0; k < A.NZ; ++k)
    for (int j = 0; j < A.NY; ++j)
      for (int i = 0; i < A.NX; ++i) {
        const double x = d.x(i), y = d.y(j), z = d.z(k);
        if (i < A.NX - 1) A.a1(i, j, k) += f1(x + 0.5 * d.hx(), y, z);
        if (j < A.NY - 1) A.a2(i, j, k) += f2(x, y + 0.5 * d.hy(), z);
        if (k < A.NZ - 1) A.a3(i, j, k) += f3(x, y, z + 0.5 * d.dz());
      }
}

/// Smooth state with |u| in roughly [0.3, 0.9] and a perturbed background potential.
inline LayeredConfiguration random_smooth_layered(DomainPtr d, std::uint64_t seed, double a_amp = 0.5) {
  Rng r(seed);
  LayeredConfiguration st(d);
  for (int n = 0; n < st.layers(); ++n) {
    SmoothField mod(r, 2, 0.15), ph(r, 3, 1.5);
    for (int j = 0; j < d->ny(); ++j)
      for (int i = 0; i < d->nx(); ++i) {
        const double x = d->x(d->px() + i), y = d->y(d->py() + j);
        st.u[n](i, j) = std::polar(0.6 + mod(x, y), ph(x, y));
      }
  }
  perturb_potential(st.A, *d, r, a_amp);
  return st;
}

inline ContinuumConfiguration random_smooth_continuum(DomainPtr d, std::uint64_t seed, double a_amp = 0.5) {
  Rng r(seed);
  ContinuumConfiguration st(d);
  SmoothField mod(r, 3, 0.1), ph(r, 4, 1.5);
  for (int k = 0; k < st.nz(); ++k)
    for (int j = 0; j < d->ny(); ++j)
      for (int i = 0; i < d->nx(); ++i) {
        const double x = d->x(d->px() + i), y = d->y(d->py() + j), z = d->z(d->k_bottom() + k);
        st.psi(i, j, k) = std::polar(0.6 + mod(x, y, z), ph(x, y, z));
      }
  perturb_potential(st.A, *d, r, a_amp);
  return st;
}

inline GaugeFunction random_gauge(const DomainDiscretization& d, std::uint64_t seed, double amp = 3.0) {
  Rng r(seed);
  SmoothField f(r, 4, amp);
  GaugeFunction g(d);
  for (int k = 0; k < d.NZ(); ++k)
    for (int j = 0; j < d.NY(); ++j)
      for (int i = 0; i < d.NX(); ++i) g.g(i, j, k) = f(d.x(i), d.y(j), d.z(k));
  return g;
}

}  // namespace ldgl
