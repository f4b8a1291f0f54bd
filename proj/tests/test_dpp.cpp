#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "mclt/dpp/alpha_det.hpp"
#include "mclt/dpp/decay.hpp"
#include "mclt/dpp/experiment.hpp"
#include "mclt/dpp/fredholm.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/dpp/sampling.hpp"
#include "mclt/dpp/variance.hpp"

using namespace mclt;
using namespace mclt::dpp;
using std::numbers::pi;

namespace {

double ryser_permanent(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  double total = 0.0;
  for (unsigned s = 1; s < (1u << n); ++s) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j)
        if (s & (1u << j)) row += a(i, j);
      prod *= row;
    }
    total += ((n - std::popcount(s)) % 2 ? -1.0 : 1.0) * prod;
  }
  return total;
}

Eigen::MatrixXd random_psd(int m, std::mt19937_64& g, int rank = -1) {
  std::normal_distribution<double> nd;
  const int r = rank < 0 ? m : rank;
  Eigen::MatrixXd b(m, r);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < r; ++j) b(i, j) = nd(g);
  return b * b.transpose();
}

DiscretizedKernel tiny_kernel(const Eigen::MatrixXd& M, double alpha) {
  const int m = static_cast<int>(M.rows());
  Eigen::MatrixXd pts(m, 1);
  for (int i = 0; i < m; ++i) pts(i, 0) = i;
  return DiscretizedKernel::from_matrix(pts, Eigen::VectorXd::Ones(m), M, alpha);
}

// rank-1 projection on [-1,1] (constant kernel 1/2), 8 cells
DiscretizedKernel rank_one(double alpha) { return discretize_window(projection_kernel(1, 1.0, alpha), 1.0, 0.25); }

// det(I + α diag(g) M)^{-1/α} directly, α = −1/m or real u
std::complex<double> direct_laplace(const DiscretizedKernel& dk, const Eigen::VectorXd& phi, std::complex<double> u,
                                   double alpha) {
  const int m = dk.size();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) += alpha * (1.0 - std::exp(-u * phi(i))) * dk.matrix(i, j);
  return std::pow(a.determinant(), -1.0 / alpha);
}

}  // namespace

// ---- alpha_det ----

TEST(AlphaDet, TwoByTwo) {
  Eigen::Matrix2d a;
  a << 2, 3, 5, 7;
  for (double alpha : {-1.0, 0.0, 0.5, 2.0}) EXPECT_DOUBLE_EQ(alpha_det(a, alpha), 14 + alpha * 15);
  EXPECT_DOUBLE_EQ(alpha_det(a, -1.0), a.determinant());
}

TEST(AlphaDet, IdentityAndAllOnes) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
  for (double alpha : {-2.0, -1.0, 0.3, 1.0, 4.0}) {
    EXPECT_DOUBLE_EQ(alpha_det(id, alpha), 1.0);
    EXPECT_NEAR(alpha_det(ones, alpha), 1 + 3 * alpha + 2 * alpha * alpha, 1e-12);
  }
  EXPECT_DOUBLE_EQ(alpha_det(ones, 1.0), 6.0);
}

TEST(AlphaDet, DeterminantAndRyserPermanent) {
  std::mt19937_64 g(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 7;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = nd(g);
    const double det = a.determinant(), per = ryser_permanent(a);
    EXPECT_NEAR(alpha_det(a, -1.0), det, 1e-9 * std::max(1.0, std::abs(det)));
    EXPECT_NEAR(alpha_det(a, 1.0), per, 1e-9 * std::max(1.0, std::abs(per)));
  }
}

TEST(AlphaDet, RowMultilinearityAndZeroRow) {
  std::mt19937_64 g(11);
  std::normal_distribution<double> nd;
  const int n = 5;
  Eigen::MatrixXd a(n, n), r1(1, n), r2(1, n);
  for (int i = 0; i < n; ++i) {
    r1(0, i) = nd(g);
    r2(0, i) = nd(g);
    for (int j = 0; j < n; ++j) a(i, j) = nd(g);
  }
  const double s = 1.7, t = -0.4, alpha = 0.6;
  auto with_row = [&](const Eigen::MatrixXd& r) {
    Eigen::MatrixXd b = a;
    b.row(2) = r;
    return alpha_det(b, alpha);
  };
  EXPECT_NEAR(with_row(s * r1 + t * r2), s * with_row(r1) + t * with_row(r2), 1e-10);
  EXPECT_EQ(with_row(Eigen::MatrixXd::Zero(1, n)), 0.0);
}

TEST(AlphaDet, ComplexEntriesAndCapability) {
  Eigen::Matrix2cd a;
  a << std::complex<double>(1, 1), 2.0, std::complex<double>(0, 3), 4.0;
  const auto v = alpha_det(a, 0.5);
  EXPECT_NEAR(std::abs(v - (a(0, 0) * a(1, 1) + 0.5 * a(0, 1) * a(1, 0))), 0.0, 1e-14);
  EXPECT_THROW(alpha_det(Eigen::MatrixXd::Identity(11, 11), 1.0), CapabilityError);
}

// ---- kernels and discretization ----

TEST(Kernel, BuiltinsAreSymmetricWithPositiveDiagonal) {
  for (const auto& k : {gaussian_kernel(1), gaussian_kernel(2, 0.7, 1.0), ball_fourier_kernel(2),
                        ball_fourier_kernel(3, -1.0, 1.0), projection_kernel(3, 2.0)})
    EXPECT_NO_THROW(validate_kernel(k));
  KernelSpec bad = gaussian_kernel(1);
  bad.kernel = [](Point x, Point y) { return x[0] > y[0] ? 1.0 : 0.5; };
  EXPECT_THROW(validate_kernel(bad), ArgumentError);
}

TEST(Kernel, BallFourierValues) {
  // amplitude 1: K(0) = Vol(B); d = 2: 2π J_1(t)/t
  const auto k = ball_fourier_kernel(2, -1.0, 1.0);
  EXPECT_NEAR(k.profile(0.0), pi, 1e-12);
  EXPECT_NEAR(k.profile(1e-7), pi, 1e-10);
  EXPECT_NEAR(k.profile(2.5), 2 * pi * std::cyl_bessel_j(1.0, 2.5) / 2.5, 1e-14);
  const auto k3 = ball_fourier_kernel(3, -1.0, 1.0);
  // d = 3: 4π (sin t − t cos t)/t³
  const double t = 3.7;
  EXPECT_NEAR(k3.profile(t), 4 * pi * (std::sin(t) - t * std::cos(t)) / (t * t * t), 1e-12);
  EXPECT_NEAR(k3.profile(0.0), 4 * pi / 3, 1e-12);
}

TEST(Kernel, DiscretizationInvariants) {
  const auto dk = discretize_window(gaussian_kernel(1), 4.0, 0.25);
  EXPECT_EQ(dk.size(), 32);
  EXPECT_TRUE(dk.matrix.isApprox(dk.matrix.transpose()));
  EXPECT_NEAR(dk.trace(), (dk.weights.array() * 0.5 / std::sqrt(pi)).sum(), 1e-12);
  EXPECT_GE(dk.eigenvalues.minCoeff(), 0.0);
  // operator norm on L²(ℝ) is 1/2, compressions stay below
  EXPECT_LE(dk.max_eigenvalue(), 0.5 + 1e-9);
  EXPECT_NEAR(dk.kernel_value(3, 5), 0.5 / std::sqrt(pi) * std::exp(-0.25), 1e-12);
}

TEST(Kernel, SpectralConditionFailsLoudly) {
  // three times the default amplitude pushes the top eigenvalue past 1
  const auto big = gaussian_kernel(1, 1.0, -1.0, 1.5 / std::sqrt(pi));
  EXPECT_THROW(discretize_window(big, 8.0, 0.25), DomainError);
  auto ok = big;
  ok.alpha = 1.0;
  EXPECT_NO_THROW(discretize_window(ok, 8.0, 0.25));
  // α = −1/2 allows eigenvalues up to 2
  ok.alpha = -0.5;
  EXPECT_NO_THROW(discretize_window(ok, 8.0, 0.25));
  Eigen::Matrix2d neg;
  neg << 1, 2, 2, 1;
  EXPECT_THROW(tiny_kernel(neg, 1.0), DomainError);
  Eigen::Matrix2d asym;
  asym << 1, 0.2, 0.1, 1;
  EXPECT_THROW(tiny_kernel(asym, 1.0), ArgumentError);
}

TEST(Kernel, ProjectionKernelIsExactProjection) {
  const auto dk = discretize_window(projection_kernel(4, 3.0), 3.0, 0.5);
  int ones = 0;
  for (int i = 0; i < dk.size(); ++i) {
    EXPECT_TRUE(std::abs(dk.eigenvalues(i)) < 1e-12 || std::abs(dk.eigenvalues(i) - 1.0) < 1e-12);
    ones += dk.eigenvalues(i) > 0.5;
  }
  EXPECT_EQ(ones, 4);
}

TEST(Kernel, FileRoundTrip) {
  const auto dk = discretize_window(gaussian_kernel(2, 1.0, 1.0), 1.0, 0.5);
  const auto path = (std::filesystem::temp_directory_path() / "mclt_kernel_roundtrip.txt").string();
  write_kernel_file(dk, path);
  const auto back = read_kernel_file(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.dim, 2);
  EXPECT_EQ(back.alpha, 1.0);
  EXPECT_TRUE(back.matrix.isApprox(dk.matrix, 1e-14));
  EXPECT_TRUE(back.points.isApprox(dk.points));
}

TEST(Kernel, FileErrors) {
  const auto path = (std::filesystem::temp_directory_path() / "mclt_kernel_bad.txt").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("# two points\ndim 1\nalpha -1\npoints 2\n0 1\n1 1\nmatrix\n0.5 0.1\n0.2 0.5\n", f);
    std::fclose(f);
  }
  EXPECT_THROW(read_kernel_file(path), ArgumentError);  // asymmetric
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("dim 1\nalpha -1\npoints 2\n0 1\n1 1\nmatrix\n0.5 x\n", f);
    std::fclose(f);
  }
  EXPECT_THROW(read_kernel_file(path), ArgumentError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_kernel_file("/nonexistent/kernel.txt"), ArgumentError);
}

// ---- Fredholm Laplace transform ----

TEST(Fredholm, ZeroAtOrigin) {
  const auto dk = discretize_window(gaussian_kernel(1), 2.0, 0.25);
  EXPECT_EQ(fredholm_log_laplace(dk, phi_values(dk, bump(), 2.0), 0.0, -1.0), std::complex<double>(0.0));
}

TEST(Fredholm, RankOneProjectionHasOnePoint) {
  const auto dk = rank_one(-1.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(dk.size());
  for (std::complex<double> u : {std::complex<double>(0.3, 0), {-0.4, 0}, {0.2, 0.5}, {0.05, -0.3}})
    EXPECT_NEAR(std::abs(fredholm_log_laplace(dk, one, u, -1.0) - (-u)), 0.0, 1e-13);
}

TEST(Fredholm, RankOnePermanentalIsGeometric) {
  const auto dk = rank_one(1.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(dk.size());
  for (double u : {0.1, 0.5, 2.0, -0.3}) {
    // direct series: P(N = k) = 2^{-k-1}
    double series = 0.0;
    for (int k = 0; k < 400; ++k) series += std::pow(0.5, k + 1) * std::exp(-u * k);
    EXPECT_NEAR(fredholm_log_laplace(dk, one, u, 1.0).real(), std::log(series), 1e-12);
    EXPECT_NEAR(fredholm_log_laplace(dk, one, u, 1.0).real(), -std::log(2 - std::exp(-u)), 1e-13);
  }
  const auto c = linstat_cumulants(dk, one, 1.0);
  EXPECT_NEAR(c.mean, 1.0, 1e-8);
  EXPECT_NEAR(c.variance, 2.0, 1e-7);
  // geometric(1/2) on {0,1,...}: κ₃ = 6
  EXPECT_NEAR(c.kappa3, 6.0, 1e-5);
}

TEST(Fredholm, SpectralRadiusViolationNamesRadius) {
  const auto dk = rank_one(1.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(dk.size());
  try {
    fredholm_log_laplace(dk, one, -1.0, 1.0);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("spectral radius 1.71"), std::string::npos) << e.what();
  }
}

TEST(Fredholm, MatchesDirectDeterminant) {
  const auto k = gaussian_kernel(1);
  for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0}) {
    auto spec = k;
    spec.alpha = alpha;
    const auto dk = discretize_window(spec, 3.0, 0.25);
    const Eigen::VectorXd phi = phi_values(dk, bump(), 3.0);
    for (double u : {0.2, -0.15, 0.7}) {
      const auto direct = direct_laplace(dk, phi, u, alpha);
      EXPECT_NEAR(std::exp(fredholm_log_laplace(dk, phi, u, alpha).real()), direct.real(), 1e-10 * std::abs(direct))
          << alpha << " " << u;
    }
  }
  // complex u, integer −1/α where the power is single-valued
  auto spec = k;
  spec.alpha = -0.5;
  const auto dk = discretize_window(spec, 3.0, 0.25);
  const Eigen::VectorXd phi = phi_values(dk, bump(), 3.0);
  for (std::complex<double> u : {std::complex<double>(0.1, 0.4), {-0.2, 1.1}}) {
    const auto direct = direct_laplace(dk, phi, u, -0.5);
    EXPECT_NEAR(std::abs(std::exp(fredholm_log_laplace(dk, phi, u, -0.5)) - direct), 0.0, 1e-10);
    const FredholmOperator op(share(dk), phi, -0.5);
    EXPECT_NEAR(std::abs(std::exp(op.log_laplace_entire(u)) - direct), 0.0, 1e-10);
  }
}

TEST(Fredholm, CampbellBranch) {
  auto spec = gaussian_kernel(1, 1.0, 0.0, 2.0);
  const auto dk = discretize_window(spec, 2.0, 0.5);
  const Eigen::VectorXd phi = phi_values(dk, bump(), 2.0);
  const std::complex<double> u(0.3, -0.8);
  std::complex<double> expect = 0.0;
  for (int i = 0; i < dk.size(); ++i) expect += 2.0 * dk.weights(i) * (std::exp(-u * phi(i)) - 1.0);
  EXPECT_NEAR(std::abs(fredholm_log_laplace(dk, phi, u, 0.0) - expect), 0.0, 1e-13);
}

TEST(Fredholm, ConstantPhiFastPathAgrees) {
  // same operator with φ ≡ 1 once through the fast path and once with a
  // perturbation that forces the general path
  const auto dk = discretize_window(gaussian_kernel(1), 4.0, 0.25);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(dk.size());
  Eigen::VectorXd nearly = one;
  nearly(0) += 1e-12;
  const FredholmOperator fast(share(dk), one, -1.0), slow(share(dk), nearly, -1.0);
  ASSERT_TRUE(fast.constant_value().has_value());
  ASSERT_FALSE(slow.constant_value().has_value());
  for (std::complex<double> u : {std::complex<double>(0.4, 0.0), {0.2, 1.3}})
    EXPECT_NEAR(std::abs(fast.log_laplace(u) - slow.log_laplace(u)), 0.0, 1e-9);
}

// ---- series expansion ----

TEST(FredholmSeries, FiniteGridIsExact) {
  std::mt19937_64 g(3);
  Eigen::MatrixXd M = random_psd(3, g);
  M *= 0.3 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().maxCoeff();
  const auto dk = tiny_kernel(M, -1.0);
  const auto r = fredholm_series_check(dk, Eigen::VectorXd::Ones(3), 1.0, -1.0, 3);
  EXPECT_LT(r.abs_diff, 1e-12);
  EXPECT_LT(r.tail_bound, 1e-12);
}

TEST(FredholmSeries, RankOneGeometricAndOrigin) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Constant(4, 4, 0.25);
  const auto dk = tiny_kernel(M, 1.0);
  const auto r = fredholm_series_check(dk, Eigen::VectorXd::Ones(4), 0.05, 1.0, 6);
  EXPECT_LT(r.abs_diff, 1e-8);
  EXPECT_LE(r.abs_diff, r.tail_bound + 1e-14);
  const auto z = fredholm_series_check(dk, Eigen::VectorXd::Ones(4), 0.0, 1.0, 6);
  EXPECT_EQ(z.series, std::complex<double>(1.0));
  EXPECT_EQ(z.eigen, std::complex<double>(1.0));
  EXPECT_EQ(z.abs_diff, 0.0);
}

TEST(FredholmSeries, NormPrecondition) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Constant(2, 2, 0.5);
  const auto dk = tiny_kernel(M, 1.0);
  EXPECT_THROW(fredholm_series_check(dk, Eigen::VectorXd::Ones(2), -1.0, 1.0, 4), DomainError);
  EXPECT_THROW(fredholm_series_check(dk, Eigen::VectorXd::Ones(2), 0.1, 1.0, 7), ArgumentError);
}

TEST(FredholmSeries, RandomizedAgainstEigenvalues) {
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int tight = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double alpha = std::vector<double>{-1.0, -0.5, 0.5, 1.0, 2.0}[trial % 5];
    const int m = 2 + trial % 3;
    Eigen::MatrixXd M = random_psd(m, g, 1 + trial % m);
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().maxCoeff();
    M *= (alpha < 0 ? 0.9 / std::abs(alpha) : 1.0) * unif(g) / top;
    const auto dk = tiny_kernel(M, alpha);
    Eigen::VectorXd phi(m);
    for (int i = 0; i < m; ++i) phi(i) = unif(g);
    const std::complex<double> u(0.4 * unif(g) - 0.1, 0.6 * unif(g) - 0.3);
    SeriesCheck r;
    try {
      r = fredholm_series_check(dk, phi, u, alpha, 6);
    } catch (const DomainError&) {
      continue;
    }
    EXPECT_LE(r.abs_diff, r.tail_bound + 1e-12) << trial;
    if (r.tail_bound < 1e-9) {
      EXPECT_LT(r.abs_diff, 1e-8) << trial;
      ++tight;
    }
  }
  EXPECT_GE(tight, 10);
}

// ---- variance and cumulants ----

TEST(Variance, FormulaExamples) {
  const auto p = rank_one(-1.0);
  EXPECT_NEAR(linstat_variance_formula(p, Eigen::VectorXd::Ones(p.size()), -1.0), 0.0, 1e-14);
  const auto dk = discretize_window(gaussian_kernel(1), 2.0, 0.25);
  const Eigen::VectorXd phi = phi_values(dk, bump(), 2.0);
  double first = 0.0;
  for (int i = 0; i < dk.size(); ++i) first += phi(i) * phi(i) * dk.weights(i) * dk.kernel_value(i, i);
  EXPECT_NEAR(linstat_variance_formula(dk, phi, 0.0), first, 1e-14);
}

TEST(Variance, SchurPositivity) {
  std::mt19937_64 g(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 3 + trial % 6;
    const auto dk = tiny_kernel(random_psd(m, g, 1 + trial % m), 1.0);
    Eigen::VectorXd phi(m);
    for (int i = 0; i < m; ++i) phi(i) = nd(g);
    EXPECT_GE(linstat_variance_formula(dk, phi, 1.0), linstat_variance_formula(dk, phi, 0.0) - 1e-12);
    EXPECT_GE(linstat_variance_formula(dk, phi, 2.5), linstat_variance_formula(dk, phi, 1.0) - 1e-12);
  }
}

TEST(Cumulants, PoissonBox) {
  const double lambda = 3.0, L = 5.0;
  const auto dk = discretize_window(gaussian_kernel(1, 1.0, 0.0, lambda), L, 0.5);
  const auto c = linstat_cumulants(dk, phi_values(dk, indicator(), L), 0.0);
  const double mass = lambda * 2 * L;
  EXPECT_NEAR(c.mean / mass, 1.0, 1e-6);
  EXPECT_NEAR(c.variance / mass, 1.0, 1e-6);
  EXPECT_NEAR(c.kappa3 / mass, 1.0, 1e-6);
  EXPECT_NEAR(c.kappa4 / mass, 1.0, 1e-4);
}

TEST(Cumulants, DeterministicCount) {
  const auto p = rank_one(-1.0);
  const auto c = linstat_cumulants(p, Eigen::VectorXd::Ones(p.size()), -1.0);
  EXPECT_NEAR(c.mean, 1.0, 1e-9);
  EXPECT_NEAR(c.variance, 0.0, 1e-8);
  EXPECT_NEAR(c.kappa3, 0.0, 1e-6);
}

TEST(Cumulants, IndicatorModesOracle) {
  // φ ≡ 1: the count is a sum over kernel modes of Bernoulli(λ) (α = −1) or
  // geometric-type laws with mean λ and variance λ(1 + αλ) (α > 0)
  for (double alpha : {-1.0, 1.0}) {
    auto spec = gaussian_kernel(1);
    spec.alpha = alpha;
    const auto dk = discretize_window(spec, 6.0, 0.25);
    const auto c = linstat_cumulants(dk, Eigen::VectorXd::Ones(dk.size()), alpha);
    double mean = 0, var = 0, k3 = 0;
    for (int i = 0; i < dk.size(); ++i) {
      const double l = dk.eigenvalues(i);
      mean += l;
      var += l * (1 + alpha * l);
      k3 += l * (1 + alpha * l) * (1 + 2 * alpha * l);
    }
    EXPECT_NEAR(c.mean, mean, 1e-8 * mean);
    EXPECT_NEAR(c.variance, var, 1e-6 * var);
    EXPECT_NEAR(c.kappa3, k3, 1e-4 * std::abs(var));
  }
}

TEST(Cumulants, VarianceMatchesFormulaOnBuiltinKernels) {
  struct Case {
    KernelSpec k;
    double L, h;
    TestFunction phi;
  };
  std::vector<Case> cases = {
      {gaussian_kernel(1), 6.0, 0.25, bump()},
      {gaussian_kernel(1, 1.0, 1.0), 6.0, 0.25, bump()},
      {gaussian_kernel(1, 1.0, 2.0), 6.0, 0.25, indicator()},
      {gaussian_kernel(2, 1.0, -0.5), 2.0, 0.4, bump()},
      {ball_fourier_kernel(1), 6.0, 0.5, bump()},
      {ball_fourier_kernel(2), 3.0, 0.6, bump()},
      {projection_kernel(3, 2.0), 2.0, 0.25, bump()},
      {projection_kernel(3, 2.0, 1.0), 2.0, 0.25, indicator()},
  };
  for (const auto& c : cases) {
    const auto dk = discretize_window(c.k, c.L, c.h);
    const Eigen::VectorXd phi = phi_values(dk, c.phi, c.L);
    const double v = linstat_variance_formula(dk, phi, c.k.alpha);
    const auto rep = linstat_cumulants(dk, phi, c.k.alpha);
    EXPECT_NEAR(rep.variance, v, 1e-5 * std::abs(v)) << c.k.description << " " << c.phi.name;
  }
  // the spec example at the tighter tolerance
  const auto dk = discretize_window(gaussian_kernel(1), 8.0, 0.25);
  const Eigen::VectorXd phi = phi_values(dk, bump(), 8.0);
  const double v = linstat_variance_formula(dk, phi, -1.0);
  EXPECT_NEAR(linstat_cumulants(dk, phi, -1.0).variance, v, 1e-6 * v);
}

TEST(Cumulants, MgfGrowthIsVolumeOrder) {
  std::vector<double> ratios;
  for (double L : {4.0, 8.0, 16.0, 32.0}) {
    const auto dk = discretize_window(gaussian_kernel(1), L, 0.25);
    const double r = 0.5;
    ratios.push_back(fredholm_log_laplace(dk, Eigen::VectorXd::Ones(dk.size()), -r, -1.0).real() / (2 * L));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_GT(*lo, 0.0);
  EXPECT_LT(*hi / *lo, 1.5);
}

TEST(VarianceScaling, LatticeShortcutMatchesDenseFormula) {
  for (const auto& k : {gaussian_kernel(1, 1.0, 1.0), ball_fourier_kernel(2), gaussian_kernel(2, 1.0, -1.0)}) {
    const int n = k.dim == 1 ? 40 : 16;
    const double L = 3.0;
    const double shortcut = variance_on_grid(k, bump(), L, n);
    const auto dk = discretize(k, std::vector<double>(k.dim, -L), std::vector<double>(k.dim, L),
                               std::vector<int>(k.dim, n));
    EXPECT_NEAR(shortcut, linstat_variance_formula(dk, phi_values(dk, bump(), L), k.alpha), 1e-10 * shortcut)
        << k.description;
  }
}

TEST(VarianceScaling, PermanentalGaussianVolumeOrder) {
  const auto r = variance_scaling_fit(gaussian_kernel(1, 1.0, 1.0), bump(), {4, 8, 16, 32});
  EXPECT_GE(r.exponent, 0.85);
  EXPECT_LE(r.exponent, 1.15);
  EXPECT_EQ(r.predicted, 1.0);
  EXPECT_EQ(r.model_class, "(i)");
}

TEST(VarianceScaling, PoissonIsLinear) {
  const auto r = variance_scaling_fit(gaussian_kernel(1, 1.0, 0.0), bump(), {4, 8, 16, 32});
  EXPECT_NEAR(r.exponent, 1.0, 1e-6);
}

TEST(VarianceScaling, BallFourierSmallScales) {
  const auto r = variance_scaling_fit(ball_fourier_kernel(2), bump(), {4, 8, 16});
  EXPECT_EQ(r.predicted, 1.0);
  EXPECT_EQ(r.model_class, "(ii.b)");
  EXPECT_GE(r.exponent, 0.8);
  EXPECT_LE(r.exponent, 1.2);
}

TEST(VarianceScaling, ResolutionCheckFailsLoudly) {
  VarianceScalingOptions opt;
  opt.spacing = 1.5;
  EXPECT_THROW(variance_scaling_fit(gaussian_kernel(1, 1.0, -1.0), indicator(), {4, 8, 16}, opt), NumericalError);
  EXPECT_THROW(variance_scaling_fit(gaussian_kernel(1), bump(), {4, 8}), ArgumentError);
}

// ---- decay conditions ----

TEST(Decay, BallFourierExampleConstantsPass) {
  auto p = ball_fourier_decay_params(2);
  p.samples = 4000;
  EXPECT_NEAR(p.c2, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(p.c1, 2 * pi / (4 * std::sqrt(pi)), 1e-15);
  const auto rep = kernel_decay_check(ball_fourier_kernel(2, -1.0, 1.0), p);
  EXPECT_TRUE(rep.iib_pass);
  EXPECT_EQ(rep.annuli.size(), 40u);
  for (const auto& a : rep.annuli) EXPECT_GE(a.fraction, p.c2) << a.n;
  EXPECT_TRUE(rep.integral_pass);
  EXPECT_NEAR(rep.tail_slope, -1.0, 0.1);
  EXPECT_GT(rep.c3, 0.0);
}

TEST(Decay, GaussianFailsEveryPolynomialRate) {
  const auto k = gaussian_kernel(2, 1.0, -1.0, 1.0);
  for (double beta : {1.1, 1.5, 1.9}) {
    DecayParams p;
    p.decay_beta = beta;
    p.r = 1.0;
    p.c1 = 1e-3;
    p.c2 = 1e-3;
    p.samples = 2000;
    const auto rep = kernel_decay_check(k, p);
    EXPECT_FALSE(rep.iib_pass);
    EXPECT_FALSE(rep.integral_pass);
  }
}

TEST(Decay, NearDiagonalConstant) {
  KernelSpec k;
  k.dim = 2;
  k.alpha = -1.0;
  k.profile = [](double r) { return r < 0.5 ? 0.3 : 0.3 * std::exp(-(r - 0.5)); };
  k.kernel = [p = k.profile](Point x, Point y) { return p(distance(x, y)); };
  DecayParams p;
  p.a = 0.3;
  p.delta = 0.5;
  p.n_max = 2;
  p.samples = 2000;
  auto rep = kernel_decay_check(k, p);
  ASSERT_TRUE(rep.iia_pass.has_value());
  EXPECT_TRUE(*rep.iia_pass);
  p.a = 0.31;
  rep = kernel_decay_check(k, p);
  EXPECT_FALSE(*rep.iia_pass);
}

// ---- sampling ----

TEST(Sampling, IdentityAndZero) {
  const auto id = tiny_kernel(Eigen::MatrixXd::Identity(6, 6), -1.0);
  Xoshiro256pp g(1);
  for (int s = 0; s < 20; ++s) EXPECT_EQ(sample_dpp(id, g), (Configuration{0, 1, 2, 3, 4, 5}));
  const auto zero = tiny_kernel(Eigen::MatrixXd::Zero(5, 5), -1.0);
  for (int s = 0; s < 20; ++s) EXPECT_TRUE(sample_dpp(zero, g).empty());
  for (const auto& c : sample_permanental_cox(zero, 2.0, 100, 3)) EXPECT_TRUE(c.empty());
  Eigen::MatrixXd big = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(sample_dpp(tiny_kernel(big, 1.0), g), DomainError);
  EXPECT_THROW(sample_permanental_cox(zero, 1.0, 10, 1), CapabilityError);
}

TEST(Sampling, RankOneLocationChiSquare) {
  const auto dk = discretize_window(projection_kernel(3, 1.0), 1.0, 0.125);
  // rank-1 with unequal diagonal: project onto one normalized random vector
  std::mt19937_64 g(9);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(dk.size());
  for (int i = 0; i < v.size(); ++i) v(i) = nd(g);
  v.normalize();
  const auto p = tiny_kernel(v * v.transpose(), -1.0);
  const std::size_t n = 100000;
  const auto confs = sample_dpp(p, n, 17);
  std::vector<double> counts(p.size(), 0.0);
  for (const auto& c : confs) {
    ASSERT_EQ(c.size(), 1u);
    counts[c[0]] += 1;
  }
  double chi2 = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double e = n * v(i) * v(i);
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  boost::math::chi_squared dist(p.size() - 1);
  EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(Sampling, MeanCountIsTrace) {
  const auto dk = discretize_window(gaussian_kernel(1, 1.0, -1.0, 1.0 / std::sqrt(pi)), 4.0, 0.125);
  ASSERT_LE(dk.size(), 64);
  const auto confs = sample_dpp(dk, 100000, 5);
  std::vector<double> n;
  for (const auto& c : confs) n.push_back(static_cast<double>(c.size()));
  const double se = std::sqrt(variance(n) / n.size());
  EXPECT_NEAR(mean(n), dk.trace(), 3 * se);
  // count variance Σλ(1−λ)
  double v = 0.0;
  for (int i = 0; i < dk.size(); ++i) v += dk.eigenvalues(i) * (1 - dk.eigenvalues(i));
  EXPECT_NEAR(variance(n), v, 0.03 * v);
}

TEST(Sampling, DeterministicAcrossWorkers) {
  const auto dk = discretize_window(gaussian_kernel(1), 2.0, 0.25);
  EXPECT_EQ(sample_dpp(dk, 9000, 4, 1), sample_dpp(dk, 9000, 4, 3));
}

TEST(CorrelationValidation, RankOneRepulsion) {
  const auto dk = rank_one(-1.0);
  const auto rep = correlation_validation(sample_dpp(dk, 20000, 8), dk, -1.0);
  EXPECT_FALSE(rep.low_sample_warning);
  EXPECT_EQ(rep.max_z_rho2 < 3.0 || rep.fraction_within >= 0.9, true);
  // on-diagonal second factorial moments vanish identically
  EXPECT_TRUE(rep.pass);
}

TEST(CorrelationValidation, PoissonIndependence) {
  const auto dk = discretize_window(gaussian_kernel(1, 1.0, 0.0, 0.8), 2.0, 0.25);
  const auto rep = correlation_validation(sample_poisson(dk, 20000, 12), dk, 0.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_GE(rep.fraction_within, 0.9);
}

TEST(CorrelationValidation, GaussianDeterminantal) {
  const auto dk = discretize_window(gaussian_kernel(1, 1.0, -1.0, 1.0 / std::sqrt(pi)), 3.0, 0.25);
  const auto rep = correlation_validation(sample_dpp(dk, 20000, 21), dk, -1.0);
  EXPECT_GE(rep.fraction_within, 0.9);
  EXPECT_TRUE(rep.pass);
}

TEST(CorrelationValidation, PermanentalCox) {
  const auto dk = discretize_window(gaussian_kernel(1, 1.0, 2.0, 0.6), 2.0, 0.25);
  const auto rep = correlation_validation(sample_permanental_cox(dk, 2.0, 40000, 33), dk, 2.0);
  EXPECT_GE(rep.fraction_within, 0.9);
  EXPECT_TRUE(rep.pass);
  // the same samples are inconsistent with the α = 1 product formula
  const auto wrong = correlation_validation(sample_permanental_cox(dk, 2.0, 40000, 33), dk, 1.0);
  EXPECT_LT(wrong.fraction_within, rep.fraction_within);
}

TEST(CorrelationValidation, LowSampleWarning) {
  const auto dk = rank_one(-1.0);
  EXPECT_TRUE(correlation_validation(sample_dpp(dk, 100, 8), dk, -1.0).low_sample_warning);
  EXPECT_THROW(correlation_validation({}, dk, -1.0), ArgumentError);
}

// ---- CLT experiment ----

TEST(DppClt, DeterminantalGaussianCumulants) {
  DppCltOptions opt;
  opt.zero_scan = false;
  const auto res = dpp_clt_experiment(gaussian_kernel(1), bump(), {8, 16, 32, 64}, opt);
  EXPECT_TRUE(res.skewness_decreasing);
  EXPECT_LT(std::abs(res.rows.back().cumulants->skewness), 0.1);
  for (const auto& r : res.rows) EXPECT_NEAR(r.cumulants->variance, r.variance_formula, 1e-5 * r.variance_formula);
}

TEST(DppClt, PoissonSkewnessClosedForm) {
  const double lambda = 2.0;
  DppCltOptions opt;
  opt.zero_scan = false;
  const auto res = dpp_clt_experiment(gaussian_kernel(1, 1.0, 0.0, lambda), indicator(), {4, 8, 16}, opt);
  for (const auto& r : res.rows)
    EXPECT_NEAR(r.cumulants->skewness, 1.0 / std::sqrt(lambda * 2 * r.L), 1e-8) << r.L;
}

TEST(DppClt, ZeroFreeRadiusIsUniform) {
  DppCltOptions opt;
  const auto res = dpp_clt_experiment(gaussian_kernel(1), indicator(), {8, 16, 32, 64}, opt);
  for (const auto& r : res.rows) {
    ASSERT_TRUE(r.zero_free_radius.has_value());
    // nearest zero: 1 − λ_max(1 − e^{iu}) = 0
    const auto dk = discretize_window(gaussian_kernel(1), r.L, 0.25);
    const double l = dk.max_eigenvalue();
    const double exact = std::hypot(std::log(1 / l - 1), pi);
    // the scan certifies a lower bound; zeros cluster near λ ≈ 1/2
    EXPECT_LE(*r.zero_free_radius, exact + 1e-9) << r.L;
    EXPECT_GT(*r.zero_free_radius, exact * (1 - 1e-3)) << r.L;
    EXPECT_TRUE(r.radius_certified) << r.L;
  }
  EXPECT_TRUE(res.radius_uniform);
}

TEST(DppClt, SamplingBackend) {
  DppCltOptions opt;
  opt.backend = DppBackend::Sampling;
  opt.samples = 4000;
  opt.zero_scan = false;
  const auto res = dpp_clt_experiment(gaussian_kernel(1), bump(), {4, 8}, opt);
  for (const auto& r : res.rows) {
    ASSERT_TRUE(r.empirical_ks.has_value());
    EXPECT_LT(*r.empirical_ks, 0.2);
  }
  auto spec = gaussian_kernel(1);
  spec.alpha = 0.5;
  EXPECT_THROW(dpp_clt_experiment(spec, bump(), {4}, opt), CapabilityError);
}
