#pragma once

// Finite-M limit distributions. F_{M,p}(s) for p in (1/2,1) is a contour
// integral of a Fredholm determinant:
//
//   F_{M,p}(s) = (1/2 pi i) oint dl/l det(I - l K) / prod_{k<M} (1 - l (q/p)^k)
//
// with K = Khat restricted to (-s, inf) and
// Khat(z,z') = p/sqrt(2 pi) exp(-(p^2+q^2)(z^2+z'^2)/4 + p q z z').
// The operator is discretized by Gauss-Legendre quadrature on a truncated
// interval (Nystrom, symmetrized weights); the contour is a circle around
// all poles, integrated by the trapezoid rule. For p = 1 the distribution
// is the largest-eigenvalue law of an M x M GUE matrix, computed exactly as
// a ratio of Gram determinants of truncated Gaussian moments.

#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numeric/gauss.hpp"
#include "numeric/linalg.hpp"
#include "numeric/special.hpp"

namespace shocklab {

struct KernelSpec {
  double p;
  double s;
  double q() const noexcept { return 1.0 - p; }
};

inline double kernel_eval(const KernelSpec& spec, double z, double zp) {
  const double p = spec.p, q = spec.q();
  return p / std::sqrt(2.0 * std::numbers::pi) *
         std::exp(-(p * p + q * q) * (z * z + zp * zp) / 4.0 + p * q * (z * zp));
}

struct NumericParams {
  int m = 64;             // quadrature nodes
  double L = 0.0;         // truncation length; 0 selects max(12, 10/(p-q))
  int n_lambda = 256;     // contour nodes (even)
  double radius_scale = 1.5;
  bool refine = true;     // re-evaluate at (2m, L+4) and compare
  double refine_tol = 1e-6;
  bool use_symmetry = true;  // evaluate the upper half circle only

  double effective_L(double p) const {
    if (L > 0.0) return L;
    return std::max(12.0, 10.0 / (2.0 * p - 1.0));
  }
};

// Discretized kernel on (-s, -s+L): A_ij = sqrt(w_i w_j) Khat(z_i, z_j).
class NystromOperator {
 public:
  NystromOperator(const KernelSpec& spec, int m, double L) : m_(m) {
    if (m < 2) throw UsageError("NystromOperator: need at least two nodes");
    if (!(L > 0)) throw UsageError("NystromOperator: truncation length must be positive");
    auto quad = num::gauss_legendre(m, -spec.s, -spec.s + L);
    nodes_ = std::move(quad.nodes);
    weights_ = std::move(quad.weights);
    a_.resize(static_cast<std::size_t>(m) * m);
    std::vector<double> sq(m);
    for (int i = 0; i < m; ++i) sq[i] = std::sqrt(weights_[i]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) {
        const double v = sq[i] * sq[j] * kernel_eval(spec, nodes_[i], nodes_[j]);
        a_[i * m + j] = v;
        a_[j * m + i] = v;
      }
  }

  int size() const noexcept { return m_; }
  const std::vector<double>& matrix() const noexcept { return a_; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < m_; ++i) t += a_[i * m_ + i];
    return t;
  }

 private:
  int m_;
  std::vector<double> nodes_, weights_, a_;
};

// det(I - lambda A) by dense complex LU with partial pivoting.
inline std::complex<double> fredholm_det(const NystromOperator& op, std::complex<double> lambda) {
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
    throw NumericError("fredholm_det: non-finite lambda");
  const int m = op.size();
  std::vector<std::complex<double>> a(static_cast<std::size_t>(m) * m);
  const auto& k = op.matrix();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -lambda * k[i];
  for (int i = 0; i < m; ++i) a[i * m + i] += 1.0;
  return num::lu_det(std::move(a), m);
}

// Integration circle |lambda| = radius around 0 and the poles (p/q)^k, k < M.
struct ContourSpec {
  int M;
  double radius;
  int n_lambda;
};

inline ContourSpec make_contour(int M, double p, const NumericParams& np) {
  if (M < 1) throw UsageError("make_contour: M must be >= 1");
  const double ratio = p / (1.0 - p);
  const double radius = np.radius_scale * std::pow(ratio, M - 1);
  for (int k = 0; k < M; ++k) {
    const double pole = std::pow(ratio, k);
    if (std::fabs(radius - pole) < 1e-9 * pole)
      throw ConfigError("contour radius sits on the pole (p/q)^" + std::to_string(k));
  }
  if (radius <= std::pow(ratio, M - 1))
    throw ConfigError("contour radius does not enclose all poles");
  int n = std::max(np.n_lambda, 2 * np.m + 16);
  if (n % 2) ++n;
  return {M, radius, n};
}

struct FEvalResult {
  double value = 0.0;      // raw real part (not clamped)
  double imag_abs = 0.0;   // |imaginary part| diagnostic
  double refine_delta = 0.0;
  int m = 0;
  double L = 0.0;
  double radius = 0.0;
  int n_lambda = 0;

  double clamped() const { return value < 0.0 ? 0.0 : (value > 1.0 ? 1.0 : value); }
};

namespace detail {

inline FEvalResult f_mp_single(int M, double p, double s, const NumericParams& np, int m,
                               double L) {
  const double q = 1.0 - p;
  const ContourSpec contour = make_contour(M, p, np);
  NystromOperator op(KernelSpec{p, s}, m, L);

  std::vector<double> pole_ratio(M);
  for (int k = 0; k < M; ++k) pole_ratio[k] = std::pow(q / p, k);

  const int n = contour.n_lambda;
  const auto term = [&](int j) -> std::complex<double> {
    const double theta = 2.0 * std::numbers::pi * j / n;
    const std::complex<double> lam = std::polar(contour.radius, theta);
    std::complex<double> den = lam;
    for (int k = 0; k < M; ++k) den *= 1.0 - lam * pole_ratio[k];
    return fredholm_det(op, lam) / den * lam;
  };

  std::complex<double> acc = 0.0;
  if (np.use_symmetry) {
    // the integrand has real coefficients: h(2 pi - theta) = conj(h(theta))
    acc = term(0) + term(n / 2);
    double re = 0.0;
    for (int j = 1; j < n / 2; ++j) re += term(j).real();
    acc += 2.0 * re;
  } else {
    for (int j = 0; j < n; ++j) acc += term(j);
  }
  acc /= static_cast<double>(n);

  FEvalResult r;
  r.value = acc.real();
  r.imag_abs = std::fabs(acc.imag());
  r.m = m;
  r.L = L;
  r.radius = contour.radius;
  r.n_lambda = n;
  return r;
}

}  // namespace detail

inline double f_m1_gram(int M, double s);

// F_{M,p}(s). For p = 1 the Gram route is used (the contour representation
// is only defined for p < 1).
inline FEvalResult f_mp(int M, double p, double s, const NumericParams& np = {}) {
  if (M < 1) throw UsageError("f_mp: M must be >= 1");
  if (!(p > 0.5)) throw UsageError("f_mp: p must lie in (1/2, 1]");
  if (!(p <= 1.0)) throw UsageError("f_mp: p must lie in (1/2, 1]");
  if (p == 1.0) {
    FEvalResult r;
    r.value = f_m1_gram(M, s);
    return r;
  }
  const double L = np.effective_L(p);
  FEvalResult base = detail::f_mp_single(M, p, s, np, np.m, L);
  if (!np.refine) return base;
  NumericParams fine = np;
  fine.n_lambda = std::max(np.n_lambda, 4 * np.m + 16);
  FEvalResult ref = detail::f_mp_single(M, p, s, fine, 2 * np.m, L + 4.0);
  ref.refine_delta = std::fabs(ref.value - base.value);
  if (ref.refine_delta > np.refine_tol) {
    std::ostringstream msg;
    msg << "f_mp(" << M << ", " << p << ", " << s << ") refinement disagreement: "
        << "m=" << base.m << " L=" << base.L << " -> " << base.value << "; m=" << ref.m
        << " L=" << ref.L << " -> " << ref.value << "; |delta|=" << ref.refine_delta
        << " > tol=" << np.refine_tol;
    throw NumericError("f_mp: quadrature did not converge", msg.str());
  }
  return ref;
}

// P(largest eigenvalue of an M x M GUE <= s) as a ratio of Gram determinants
// of the truncated Gaussian moments mu_k(s) = int_{-inf}^s x^k e^{-x^2/2} dx,
// computed with the recurrence mu_k = (k-1) mu_{k-2} - s^{k-1} e^{-s^2/2}.
inline double f_m1_gram(int M, double s) {
  if (M < 1) throw UsageError("f_m1_gram: M must be >= 1");
  if (M > 12)
    throw NumericError("f_m1_gram: M > 12 refused",
                       "moment Gram determinants underflow beyond M = 12 in double precision");
  const double sqrt2pi = std::sqrt(2.0 * std::numbers::pi);
  const double gauss = std::exp(-s * s / 2.0);
  const int kmax = 2 * M - 2;
  std::vector<double> mu(kmax + 1), inf(kmax + 1);
  mu[0] = sqrt2pi * num::normal_cdf(s);
  if (kmax >= 1) mu[1] = -gauss;
  for (int k = 2; k <= kmax; ++k) mu[k] = (k - 1) * mu[k - 2] - std::pow(s, k - 1) * gauss;
  inf[0] = sqrt2pi;
  if (kmax >= 1) inf[1] = 0.0;
  for (int k = 2; k <= kmax; ++k) inf[k] = (k - 1) * inf[k - 2];
  // scale rows/columns so both determinants stay O(1)
  std::vector<double> c(M);
  for (int i = 0; i < M; ++i) c[i] = std::sqrt(inf[2 * i]);
  std::vector<double> num_m(static_cast<std::size_t>(M) * M), den_m(num_m.size());
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      num_m[i * M + j] = mu[i + j] / (c[i] * c[j]);
      den_m[i * M + j] = inf[i + j] / (c[i] * c[j]);
    }
  const double den = num::lu_det(std::move(den_m), M);
  if (den == 0.0 || !std::isfinite(den))
    throw NumericError("f_m1_gram: degenerate moment determinant");
  return num::lu_det(std::move(num_m), M) / den;
}

// One sample of the largest eigenvalue of an M x M GUE matrix: real N(0,1)
// diagonal, complex off-diagonal entries with Re/Im variance 1/2 (so that
// M = 1 is a standard Gaussian), eigenvalues by Jacobi rotations.
template <class Rng>
double gue_sample_max(int M, Rng& rng) {
  if (M < 1) throw UsageError("gue_sample_max: M must be >= 1");
  std::normal_distribution<double> gauss;
  std::vector<std::complex<double>> h(static_cast<std::size_t>(M) * M);
  const double root_half = std::sqrt(0.5);
  for (int i = 0; i < M; ++i) {
    h[i * M + i] = gauss(rng);
    for (int j = i + 1; j < M; ++j) {
      const std::complex<double> z(root_half * gauss(rng), root_half * gauss(rng));
      h[i * M + j] = z;
      h[j * M + i] = std::conj(z);
    }
  }
  return num::jacobi_hermitian_eigenvalues(std::move(h), M).back();
}

// Monte Carlo sample of sup over 0 = t_0 <= ... <= t_M = 1 of the summed
// Brownian increments sum_i B_i(t_{i+1}) - B_i(t_i), on a discrete grid.
// Cross-check only; the Gram route is the sharp evaluation of the same law.
template <class Rng>
double brownian_chain_max_sample(int M, int steps, Rng& rng) {
  if (M < 1) throw UsageError("brownian_chain_max_sample: M must be >= 1");
  if (steps < 1) throw UsageError("brownian_chain_max_sample: steps must be >= 1");
  std::normal_distribution<double> gauss;
  const double sd = std::sqrt(1.0 / steps);
  std::vector<double> v(steps + 1);
  double b = 0.0;
  v[0] = 0.0;
  for (int k = 1; k <= steps; ++k) {
    b += sd * gauss(rng);
    v[k] = b;
  }
  for (int i = 1; i < M; ++i) {
    b = 0.0;
    double best = v[0];
    for (int k = 1; k <= steps; ++k) {
      b += sd * gauss(rng);
      best = std::max(best, v[k] - b);
      v[k] = best + b;
    }
  }
  return v[steps];
}

// Limit of P(Y_M >= -R): F_{M,p}(0) when R >= M, else F_{M,p}(0) F_{M-R,p}(0).
inline double product_law(int M, int R, double p, const NumericParams& np = {}) {
  if (M < 1) throw UsageError("product_law: M must be >= 1");
  const auto f0 = [&](int mm) {
    return p == 1.0 ? f_m1_gram(mm, 0.0) : f_mp(mm, p, 0.0, np).value;
  };
  if (R >= M) return f0(M);
  return f0(M) * f0(M - R);
}

// Tabulated F_{M,p} over an s grid, with quadrature provenance and
// diagnostics. Non-monotonicity is flagged, never hidden.
struct DistributionTable {
  int M = 1;
  double p = 1.0;
  NumericParams np;
  std::vector<double> s, F;
  double max_monotonicity_violation = 0.0;
  double max_bound_excess = 0.0;
  double radius = 0.0;

  static DistributionTable build(int M, double p, std::vector<double> s_grid,
                                 const NumericParams& np = {}) {
    if (s_grid.size() < 2) throw UsageError("DistributionTable: need at least two grid points");
    for (std::size_t i = 1; i < s_grid.size(); ++i)
      if (!(s_grid[i] > s_grid[i - 1]))
        throw UsageError("DistributionTable: s grid must be strictly increasing");
    DistributionTable t;
    t.M = M;
    t.p = p;
    t.np = np;
    t.s = std::move(s_grid);
    t.F.reserve(t.s.size());
    for (const double sv : t.s) {
      if (p == 1.0) {
        t.F.push_back(f_m1_gram(M, sv));
      } else {
        FEvalResult r = f_mp(M, p, sv, np);
        t.F.push_back(r.value);
        t.radius = r.radius;
      }
    }
    for (std::size_t i = 0; i + 1 < t.F.size(); ++i)
      t.max_monotonicity_violation =
          std::max(t.max_monotonicity_violation, t.F[i] - t.F[i + 1]);
    for (const double f : t.F)
      t.max_bound_excess = std::max({t.max_bound_excess, -f, f - 1.0});
    return t;
  }

  // Piecewise-linear in s (the table assumes continuity); clamped to the
  // boundary values outside the grid.
  double interpolate(double x) const {
    if (x <= s.front()) return F.front();
    if (x >= s.back()) return F.back();
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - s.begin());
    const double w = (x - s[i - 1]) / (s[i] - s[i - 1]);
    return (1.0 - w) * F[i - 1] + w * F[i];
  }

  void write_csv(std::ostream& os) const {
    os << "M,p,m,L,r,n_lambda\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g,%.17g,%d\n", M, p, p == 1.0 ? 0 : np.m,
                  p == 1.0 ? 0.0 : np.effective_L(p), radius, p == 1.0 ? 0 : np.n_lambda);
    os << buf;
    os << "s,F\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s[i], F[i]);
      os << buf;
    }
  }

  static DistributionTable read_csv(std::istream& is) {
    DistributionTable t;
    std::string line;
    if (!std::getline(is, line) || line.rfind("M,p,", 0) != 0)
      throw UsageError("DistributionTable: missing provenance header");
    if (!std::getline(is, line)) throw UsageError("DistributionTable: truncated header");
    {
      std::istringstream ls(line);
      char comma;
      double L;
      int nl;
      ls >> t.M >> comma >> t.p >> comma >> t.np.m >> comma >> L >> comma >> t.radius >> comma >>
          nl;
      if (!ls) throw UsageError("DistributionTable: malformed header row");
      t.np.L = L;
      t.np.n_lambda = nl > 0 ? nl : t.np.n_lambda;
    }
    if (!std::getline(is, line) || line != "s,F")
      throw UsageError("DistributionTable: missing column header");
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      double sv, fv;
      char comma;
      ls >> sv >> comma >> fv;
      if (!ls) throw UsageError("DistributionTable: malformed data row: " + line);
      t.s.push_back(sv);
      t.F.push_back(fv);
    }
    if (t.s.size() < 2) throw UsageError("DistributionTable: too few rows");
    return t;
  }
};

}  // namespace shocklab
