#pragma once

#include <algorithm>
#include <cmath>

#include "ldgl/domain.hpp"

namespace ldgl::test {

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline ModelParams small_params(int nx = 9, double dz = 0.125, double pad = 0.25) {
  ModelParams p = ModelParams::layered(0.1, 1.0, 4, 10.0);
  p.mesh = {nx, nx, dz};
  p.pad = pad;
  return p;
}

}  // namespace ldgl::test
