#pragma once

// Gauss-Legendre nodes and weights by Newton iteration on the Legendre
// recurrence.

#include <cmath>
#include <numbers>
#include <vector>

#include "../errors.hpp"

namespace shocklab::num {

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline Quadrature gauss_legendre(int n, double a, double b) {
  if (n < 1) throw UsageError("gauss_legendre: need at least one node");
  if (!(b > a)) throw UsageError("gauss_legendre: empty interval");
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    q.nodes[i] = xm - xl * z;
    q.nodes[n - 1 - i] = xm + xl * z;
    q.weights[i] = q.weights[n - 1 - i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
  }
  return q;
}

}  // namespace shocklab::num
