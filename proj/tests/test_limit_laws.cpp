#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "shocklab/limit_laws.hpp"
#include "shocklab/stats.hpp"

using namespace shocklab;

namespace {
// reference values computed independently (numpy/mpmath, converged to all
// printed digits)
constexpr double kF_1_075_m1 = 0.437235659673;
constexpr double kF_1_075_0 = 0.668487113716;
constexpr double kF_1_075_p1 = 0.853410597161;
constexpr double kF_2_075_0 = 0.231134356169;
constexpr double kF_3_075_0 = 0.039121716827;
constexpr double kF_3_075_p1 = 0.167735802235;
constexpr double kF_2_09_05 = 0.257432759660;
constexpr double kF_1_06_0 = 0.903552128025;
constexpr double kGram_3_05 = 0.0329380022296687;
constexpr double kGram_5_1 = 0.000930703371071224;
constexpr double kGram_8_2 = 2.83532945850613e-5;
constexpr double kGram_12_25 = 1.70037967700522e-10;
constexpr double kGram_2_m1 = 0.00501158481829929;
}  // namespace

TEST(Kernel, PlugInValues) {
  EXPECT_NEAR(kernel_eval({1.0, 0.0}, 0.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(kernel_eval({0.75, 0.0}, 0.0, 0.0), 0.75 / std::sqrt(2.0 * std::numbers::pi),
              1e-15);
}

TEST(Kernel, SymmetricAndPositive) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  const KernelSpec spec{0.75, 0.5};
  for (int i = 0; i < 200; ++i) {
    const double z = u(rng), zp = u(rng);
    EXPECT_DOUBLE_EQ(kernel_eval(spec, z, zp), kernel_eval(spec, zp, z));
    EXPECT_GT(kernel_eval(spec, z, zp), 0.0);
  }
}

TEST(Fredholm, DetAtZeroIsOne) {
  NystromOperator op(KernelSpec{0.75, 0.0}, 32, 16.0);
  const auto d = fredholm_det(op, 0.0);
  EXPECT_DOUBLE_EQ(d.real(), 1.0);
  EXPECT_DOUBLE_EQ(d.imag(), 0.0);
}

TEST(Fredholm, LogDetMatchesTraceToFirstOrder) {
  NystromOperator op(KernelSpec{0.75, 0.0}, 48, 16.0);
  const double tr = op.trace();
  const double lam = 1e-5;
  const double logdet = std::log(fredholm_det(op, lam).real());
  // second-order term is bounded by lam^2 tr(A^2)
  EXPECT_NEAR(logdet, -lam * tr, 2.0 * lam * lam * tr * tr + 1e-14);
}

TEST(Fredholm, StableUnderNodeDoubling) {
  const KernelSpec spec{0.75, 0.0};
  NystromOperator a(spec, 64, 16.0), b(spec, 128, 16.0);
  for (double re : {-2.0, -0.5, 0.5, 2.0}) {
    const std::complex<double> lam(re, 0.7);
    EXPECT_NEAR(std::abs(fredholm_det(a, lam) - fredholm_det(b, lam)), 0.0, 1e-8);
  }
}

TEST(Fredholm, NonFiniteLambdaIsNumericError) {
  NystromOperator op(KernelSpec{0.75, 0.0}, 16, 12.0);
  EXPECT_THROW(fredholm_det(op, std::complex<double>(std::nan(""), 0.0)), NumericError);
}

TEST(FMp, MatchesIndependentReference) {
  NumericParams np;
  EXPECT_NEAR(f_mp(1, 0.75, -1.0, np).value, kF_1_075_m1, 1e-8);
  EXPECT_NEAR(f_mp(1, 0.75, 0.0, np).value, kF_1_075_0, 1e-8);
  EXPECT_NEAR(f_mp(1, 0.75, 1.0, np).value, kF_1_075_p1, 1e-8);
  EXPECT_NEAR(f_mp(2, 0.75, 0.0, np).value, kF_2_075_0, 1e-8);
  EXPECT_NEAR(f_mp(3, 0.75, 0.0, np).value, kF_3_075_0, 1e-8);
  EXPECT_NEAR(f_mp(3, 0.75, 1.0, np).value, kF_3_075_p1, 1e-8);
  EXPECT_NEAR(f_mp(2, 0.9, 0.5, np).value, kF_2_09_05, 1e-8);
  EXPECT_NEAR(f_mp(1, 0.6, 0.0, np).value, kF_1_06_0, 1e-8);
}

TEST(FMp, ResidueIdentityForMEqualOne) {
  // the integrand has poles at 0 (residue 1) and 1 (residue -det(I-K)), so
  // F_{1,p}(s) = 1 - det(I-K)
  for (double p : {0.6, 0.75, 0.9}) {
    for (double s : {-1.0, 0.0, 1.0}) {
      NumericParams np;
      np.refine = false;
      const double L = np.effective_L(p);
      NystromOperator op(KernelSpec{p, s}, np.m, L);
      const double direct = 1.0 - fredholm_det(op, 1.0).real();
      const double contour = f_mp(1, p, s, np).value;
      EXPECT_NEAR(contour, direct, 1e-8) << "p=" << p << " s=" << s;
    }
  }
}

TEST(FMp, ImaginaryPartNegligibleWithoutSymmetry) {
  NumericParams np;
  np.use_symmetry = false;
  np.refine = false;
  for (int M : {1, 2, 3}) {
    const auto r = f_mp(M, 0.75, 0.5, np);
    EXPECT_LE(r.imag_abs, 1e-8);
    NumericParams sym = np;
    sym.use_symmetry = true;
    EXPECT_NEAR(r.value, f_mp(M, 0.75, 0.5, sym).value, 1e-12);
  }
}

TEST(FMp, RadiusIndependence) {
  for (int M : {1, 2, 3}) {
    for (double s : {0.0, 1.0}) {
      NumericParams np;
      np.refine = false;
      np.radius_scale = 1.25;
      const double a = f_mp(M, 0.75, s, np).value;
      np.radius_scale = 1.5;
      const double b = f_mp(M, 0.75, s, np).value;
      np.radius_scale = 2.0;
      const double c = f_mp(M, 0.75, s, np).value;
      EXPECT_NEAR(a, b, 1e-6);
      EXPECT_NEAR(b, c, 1e-6);
    }
  }
}

TEST(FMp, TendsToOneForLargeS) {
  NumericParams np;
  EXPECT_GE(f_mp(1, 0.75, 8.0, np).value, 1.0 - 1e-4);
}

TEST(FMp, NonincreasingInM) {
  NumericParams np;
  double prev = 2.0;
  for (int M = 1; M <= 6; ++M) {
    const double v = f_mp(M, 0.75, 0.0, np).value;
    EXPECT_LT(v, prev) << "M=" << M;
    prev = v;
  }
}

TEST(FMp, DecaysInMWithRegressionGuard) {
  // strictly decreasing through M = 8 and far below F_1 / 10 by then
  NumericParams np;
  std::vector<double> vals;
  for (int M = 1; M <= 8; ++M) vals.push_back(f_mp(M, 0.75, 0.0, np).value);
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) EXPECT_GT(vals[i], vals[i + 1]);
  EXPECT_LT(vals[7], vals[0] / 10.0);
}

TEST(FMp, UsageAndConfigErrors) {
  EXPECT_THROW(f_mp(1, 0.5, 0.0), UsageError);
  EXPECT_THROW(f_mp(1, 0.49, 0.0), UsageError);
  EXPECT_THROW(f_mp(0, 0.75, 0.0), UsageError);
  NumericParams np;
  np.radius_scale = 1.0;  // radius exactly on the outermost pole
  EXPECT_THROW(f_mp(1, 0.75, 0.0, np), ConfigError);
}

TEST(FMp, RefinementReportsOnForcedDisagreement) {
  NumericParams np;
  np.m = 4;  // hopeless quadrature
  np.refine_tol = 1e-12;
  try {
    f_mp(2, 0.6, 0.0, np);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.report()).find("refinement"), std::string::npos);
  }
}

TEST(Gram, GaussianForMOne) {
  for (double s : {-4.0, -3.5, -3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5,
                   3.0, 3.5, 4.0}) {
    EXPECT_NEAR(f_m1_gram(1, s), num::normal_cdf(s), 1e-6) << "s=" << s;
  }
  EXPECT_DOUBLE_EQ(f_m1_gram(1, 0.0), 0.5);
}

TEST(Gram, ClosedFormTwoByTwoAtZero) {
  // mu_0(0) = sqrt(pi/2), mu_1(0) = -1, mu_2(0) = sqrt(pi/2), normalizer 2 pi
  const double exact = (std::numbers::pi - 2.0) / (4.0 * std::numbers::pi);
  EXPECT_NEAR(f_m1_gram(2, 0.0), exact, 1e-10);
}

TEST(Gram, HighPrecisionReferences) {
  EXPECT_NEAR(f_m1_gram(3, 0.5) / kGram_3_05, 1.0, 1e-9);
  EXPECT_NEAR(f_m1_gram(5, 1.0) / kGram_5_1, 1.0, 1e-9);
  EXPECT_NEAR(f_m1_gram(8, 2.0) / kGram_8_2, 1.0, 1e-8);
  EXPECT_NEAR(f_m1_gram(12, 2.5) / kGram_12_25, 1.0, 1e-6);
  EXPECT_NEAR(f_m1_gram(2, -1.0) / kGram_2_m1, 1.0, 1e-9);
}

TEST(Gram, GuardAndUsage) {
  EXPECT_THROW(f_m1_gram(0, 0.0), UsageError);
  EXPECT_THROW(f_m1_gram(13, 0.0), NumericError);
}

TEST(Jacobi, DiagonalizesKnownMatrices) {
  using C = std::complex<double>;
  // 2x2 with known eigenvalues 1 and 3
  std::vector<C> a{C(2, 0), C(0, 1), C(0, -1), C(2, 0)};
  auto ev = num::jacobi_hermitian_eigenvalues(a, 2);
  EXPECT_NEAR(ev[0], 1.0, 1e-12);
  EXPECT_NEAR(ev[1], 3.0, 1e-12);

  // random Hermitian: eigenvalue sums match trace and Frobenius norm
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const int n = 6;
  std::vector<C> h(n * n);
  for (int i = 0; i < n; ++i) {
    h[i * n + i] = g(rng);
    for (int j = i + 1; j < n; ++j) {
      h[i * n + j] = C(g(rng), g(rng));
      h[j * n + i] = std::conj(h[i * n + j]);
    }
  }
  double tr = 0, fro = 0;
  for (int i = 0; i < n; ++i) tr += h[i * n + i].real();
  for (const auto& z : h) fro += std::norm(z);
  auto evs = num::jacobi_hermitian_eigenvalues(h, n);
  double esum = 0, esq = 0;
  for (double e : evs) {
    esum += e;
    esq += e * e;
  }
  EXPECT_NEAR(esum, tr, 1e-10);
  EXPECT_NEAR(esq, fro, 1e-9);
  for (int i = 1; i < n; ++i) EXPECT_GE(evs[i], evs[i - 1]);
}

TEST(Gue, MOneIsStandardGaussian) {
  std::mt19937_64 rng(11);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = gue_sample_max(1, rng);
  EmpiricalCdf e(std::move(xs));
  EXPECT_LT(ks_distance(e, [](double x) { return num::normal_cdf(x); }),
            dkw_band(20000, 0.01));
}

TEST(Gue, TwoByTwoCdfAtZeroMatchesGram) {
  std::mt19937_64 rng(12);
  const int n = 100000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += gue_sample_max(2, rng) <= 0.0;
  const double exact = (std::numbers::pi - 2.0) / (4.0 * std::numbers::pi);
  EXPECT_NEAR(static_cast<double>(below) / n, exact, 3.0 * std::sqrt(exact / n));
}

TEST(Brownian, ChainMatchesGramLoosely) {
  // discretized-path cross-check of the Brownian representation
  std::mt19937_64 rng(13);
  const int n = 4000, steps = 4000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = brownian_chain_max_sample(2, steps, rng);
  EmpiricalCdf e(std::move(xs));
  const double d = ks_distance(e, [](double x) { return f_m1_gram(2, x); });
  EXPECT_LT(d, dkw_band(n, 0.01) + 0.02);  // extra room for discretization bias
}

TEST(ProductLaw, CasesAndLimits) {
  NumericParams np;
  // R >= M keeps only the first factor
  EXPECT_NEAR(product_law(2, 3, 0.75, np), f_mp(2, 0.75, 0.0, np).value, 1e-12);
  EXPECT_NEAR(product_law(2, 2, 0.75, np), f_mp(2, 0.75, 0.0, np).value, 1e-12);
  // p = 1 uses the Gram route
  const double g2 = (std::numbers::pi - 2.0) / (4.0 * std::numbers::pi);
  EXPECT_NEAR(product_law(2, 0, 1.0, np), g2 * g2, 1e-10);
  // R -> -infinity drives the value to zero
  EXPECT_LT(product_law(2, -6, 0.75, np), product_law(2, 0, 0.75, np) / 100.0);
  EXPECT_THROW(product_law(0, 0, 0.75, np), UsageError);
}

TEST(Table, BuildInterpolateRoundTrip) {
  NumericParams np;
  np.refine = false;
  std::vector<double> grid;
  for (double s = -3.0; s <= 3.01; s += 0.25) grid.push_back(s);
  auto t = DistributionTable::build(1, 0.75, grid, np);
  EXPECT_EQ(t.max_monotonicity_violation, 0.0);
  EXPECT_LT(t.max_bound_excess, 1e-6);
  EXPECT_NEAR(t.interpolate(0.125), f_mp(1, 0.75, 0.125, np).value, 1e-3);
  EXPECT_DOUBLE_EQ(t.interpolate(-10.0), t.F.front());
  EXPECT_DOUBLE_EQ(t.interpolate(10.0), t.F.back());

  std::ostringstream os;
  t.write_csv(os);
  std::istringstream is(os.str());
  auto back = DistributionTable::read_csv(is);
  EXPECT_EQ(back.M, t.M);
  EXPECT_EQ(back.p, t.p);
  ASSERT_EQ(back.s.size(), t.s.size());
  for (std::size_t i = 0; i < t.s.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.s[i], t.s[i]);
    EXPECT_DOUBLE_EQ(back.F[i], t.F[i]);
  }
}

TEST(Table, MonotoneInSAndM) {
  NumericParams np;
  np.refine = false;
  std::vector<double> grid;
  for (double s = -2.0; s <= 2.01; s += 0.25) grid.push_back(s);
  auto t1 = DistributionTable::build(1, 0.75, grid, np);
  auto t2 = DistributionTable::build(2, 0.75, grid, np);
  for (std::size_t i = 0; i + 1 < t1.F.size(); ++i) EXPECT_LE(t1.F[i], t1.F[i + 1] + 1e-6);
  for (std::size_t i = 0; i < t1.F.size(); ++i) EXPECT_GE(t1.F[i], t2.F[i]);
}
