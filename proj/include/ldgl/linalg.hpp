#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ldgl {

struct CGResult {
  int iterations = 0;
  double residual = 0;  // relative to |b|
  bool converged = false;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator.
/// `apply(x, y)` writes y = A x. Starts from the incoming x.
template <class Apply>
CGResult conjugate_gradient(Apply apply, const std::vector<double>& b, std::vector<double>& x, double tol,
                            int max_iter) {
  const size_t n = b.size();
  x.resize(n, 0.0);
  std::vector<double> r(n), p(n), q(n);
  apply(x, q);
  double bb = 0;
  for (size_t i = 0; i < n; ++i) {
    r[i] = b[i] - q[i];
    bb += b[i] * b[i];
  }
  CGResult res;
  const double bn = std::sqrt(bb);
  if (bn == 0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  p = r;
  double rr = 0;
  for (double v : r) rr += v * v;
  for (int it = 0; it < max_iter; ++it) {
    res.residual = std::sqrt(rr) / bn;
    if (res.residual <= tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    apply(p, q);
    double pq = 0;
    for (size_t i = 0; i < n; ++i) pq += p[i] * q[i];
    if (!(pq > 0)) break;
    const double alpha = rr / pq;
    double rr2 = 0;
    for (size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      rr2 += r[i] * r[i];
    }
    const double beta = rr2 / rr;
    rr = rr2;
    for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    res.iterations = it + 1;
  }
  res.residual = std::sqrt(rr) / bn;
  res.converged = res.residual <= tol;
  return res;
}

/// Gauss-Legendre nodes and weights on [a, b].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a = -1, double b = 1) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
    }
    const double wi = 2 / ((1 - z * z) * dp * dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = wi;
  }
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    x[i] = c + h * x[i];
    w[i] *= h;
  }
  return {x, w};
}

}  // namespace ldgl
