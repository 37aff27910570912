#pragma once

// Empirical distribution machinery: right-continuous empirical CDFs,
// Kolmogorov-Smirnov distance against a reference CDF, finite-sample DKW
// bands, and exact (Clopper-Pearson) binomial confidence intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numeric/special.hpp"

namespace shocklab {

class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples) : x_(std::move(samples)) {
    if (x_.empty()) throw UsageError("EmpiricalCdf: empty sample");
    std::sort(x_.begin(), x_.end());
  }

  // Right-continuous step function; fraction of samples <= x.
  double operator()(double x) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<double>(it - x_.begin()) / static_cast<double>(x_.size());
  }

  std::size_t size() const noexcept { return x_.size(); }
  const std::vector<double>& sorted() const noexcept { return x_; }

 private:
  std::vector<double> x_;
};

// sup-norm distance to a reference CDF, evaluated at the sample points with
// both one-sided gaps.
template <class Cdf>
double ks_distance(const EmpiricalCdf& e, Cdf&& ref) {
  const auto& x = e.sorted();
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = ref(x[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

// Dvoretzky-Kiefer-Wolfowitz band half-width: eps = sqrt(ln(2/alpha) / (2n)).
inline double dkw_band(std::size_t n, double alpha) {
  if (n == 0) throw UsageError("dkw_band: n must be positive");
  if (!(alpha > 0.0) || !(alpha <= 1.0)) throw UsageError("dkw_band: alpha must lie in (0, 1]");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Exact Clopper-Pearson interval for a binomial proportion.
inline Interval binom_ci(long long k, long long n, double alpha) {
  if (n <= 0) throw UsageError("binom_ci: n must be positive");
  if (k < 0 || k > n) throw UsageError("binom_ci: k must lie in [0, n]");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw UsageError("binom_ci: alpha must lie in (0, 1)");
  Interval ci;
  const double kk = static_cast<double>(k), nn = static_cast<double>(n);
  ci.lo = k == 0 ? 0.0 : num::beta_quantile(kk, nn - kk + 1.0, alpha / 2.0);
  ci.hi = k == n ? 1.0 : num::beta_quantile(kk + 1.0, nn - kk, 1.0 - alpha / 2.0);
  return ci;
}

// Tail probability estimate with its exact interval.
struct TailEstimate {
  long long k = 0;
  long long n = 0;
  double estimate = 0.0;
  Interval ci;
  double alpha = 0.05;

  static TailEstimate make(long long k, long long n, double alpha) {
    TailEstimate te;
    te.k = k;
    te.n = n;
    te.alpha = alpha;
    te.estimate = static_cast<double>(k) / static_cast<double>(n);
    te.ci = binom_ci(k, n, alpha);
    return te;
  }
};

}  // namespace shocklab
