#pragma once

// Small dense linear algebra: LU determinants with partial pivoting and a
// cyclic Jacobi eigensolver for Hermitian matrices. Sizes here are tiny
// (quadrature matrices up to a few hundred, random matrices up to ~12), so
// cubic algorithms are fine.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "../errors.hpp"

namespace shocklab::num {

// Determinant of a row-major n x n matrix via in-place LU with partial
// pivoting. Works for real and complex scalars.
template <class T>
T lu_det(std::vector<T> a, int n) {
  if (static_cast<int>(a.size()) != n * n) throw UsageError("lu_det: bad matrix size");
  T det = T(1);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a[k * n + k]);
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(a[i * n + k]);
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) return T(0);
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      det = -det;
    }
    const T pivot = a[k * n + k];
    det *= pivot;
    for (int i = k + 1; i < n; ++i) {
      const T f = a[i * n + k] / pivot;
      if (f == T(0)) continue;
      for (int j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  return det;
}

// Eigenvalues of a Hermitian n x n matrix by cyclic Jacobi rotations,
// ascending. Throws NumericError if the off-diagonal mass does not vanish
// within max_sweeps.
inline std::vector<double> jacobi_hermitian_eigenvalues(std::vector<std::complex<double>> a,
                                                        int n, int max_sweeps = 64) {
  using C = std::complex<double>;
  if (static_cast<int>(a.size()) != n * n)
    throw UsageError("jacobi_hermitian_eigenvalues: bad matrix size");
  auto at = [&](int i, int j) -> C& { return a[i * n + j]; };

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale += std::norm(at(i, j));
  scale = std::sqrt(scale) + 1e-300;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += std::norm(at(i, j));
    if (std::sqrt(off) < 1e-14 * scale) {
      std::vector<double> ev(n);
      for (int i = 0; i < n; ++i) ev[i] = at(i, i).real();
      std::sort(ev.begin(), ev.end());
      return ev;
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const C apq = at(p, q);
        const double r = std::abs(apq);
        if (r < 1e-300) continue;
        const C phase = apq / r;
        const double app = at(p, p).real(), aqq = at(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // unitary: column p gets (c, -s e^{-i phi}), column q gets (s e^{i phi}, c)
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const C akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * std::conj(phase) * akq;
          at(k, q) = s * phase * akp + c * akq;
          at(p, k) = std::conj(at(k, p));
          at(q, k) = std::conj(at(k, q));
        }
        at(p, p) = C(app - t * r, 0.0);
        at(q, q) = C(aqq + t * r, 0.0);
        at(p, q) = C(0.0, 0.0);
        at(q, p) = C(0.0, 0.0);
      }
    }
  }
  throw NumericError("jacobi_hermitian_eigenvalues: no convergence after max sweeps");
}

}  // namespace shocklab::num
