#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mclt/numeric/optimize.hpp"
#include "mclt/numeric/parallel.hpp"
#include "mclt/numeric/polynomial.hpp"
#include "mclt/numeric/quadrature.hpp"
#include "mclt/numeric/random.hpp"
#include "mclt/numeric/stats.hpp"

using namespace mclt;

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  for (int n : {1, 2, 5, 16, 33}) {
    const auto rule = gauss_legendre(n, -1.0, 2.0);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += rule.weights[k] * std::pow(rule.nodes[k], p);
      const double exact = (std::pow(2.0, p + 1) - std::pow(-1.0, p + 1)) / (p + 1);
      EXPECT_NEAR(s, exact, 1e-11 * std::max(1.0, std::abs(exact))) << "n=" << n << " p=" << p;
    }
  }
}

TEST(Quadrature, PeriodicTrapezoidIsSpectral) {
  // ∫_0^{2π} e^{cos θ} dθ = 2π I₀(1) = 7.95492652101284...
  const auto rule = periodic_trapezoid(32);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * std::exp(std::cos(rule.nodes[k]));
  EXPECT_NEAR(s, 7.954926521012845, 1e-13);
}

TEST(Optimize, GoldenSectionFindsPeak) {
  const auto opt = golden_section_max([](double x) { return -(x - 0.3) * (x - 0.3); }, -1.0, 2.0);
  EXPECT_NEAR(opt.x, 0.3, 1e-6);
}

TEST(Optimize, NelderMeadRosenbrock) {
  const auto opt = nelder_mead_min(
      [](const std::vector<double>& p) {
        return 100 * std::pow(p[1] - p[0] * p[0], 2) + std::pow(1 - p[0], 2);
      },
      {-1.2, 1.0}, 0.5, {}, {}, 1e-16, 5000);
  EXPECT_NEAR(opt.x[0], 1.0, 1e-4);
  EXPECT_NEAR(opt.x[1], 1.0, 1e-4);
}

TEST(Polynomial, RootsOfKnownPolynomial) {
  // (z-1)(z+2)(z-3i) = z³ + (1-3i)z² + (-2-3i)z + 6i
  const std::vector<cplx> c = {cplx(0, 6), cplx(-2, -3), cplx(1, -3), 1.0};
  auto roots = poly_roots(c);
  ASSERT_EQ(roots.size(), 3u);
  for (cplx expected : {cplx(1, 0), cplx(-2, 0), cplx(0, 3)}) {
    double best = 1e9;
    for (cplx r : roots) best = std::min(best, std::abs(r - expected));
    EXPECT_LT(best, 1e-12);
  }
}

TEST(Stats, LinearFitExactLine) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  const auto f = linear_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
}

TEST(Stats, EffectiveSampleSizeOfAr1) {
  // AR(1) with coefficient ρ has τ = (1+ρ)/(1−ρ)
  const double rho = 0.8;
  std::mt19937_64 g(5);
  std::normal_distribution<double> nd;
  std::vector<double> x(200000);
  double v = 0.0;
  for (auto& e : x) e = v = rho * v + nd(g);
  const double ess = effective_sample_size(x);
  const double expected = x.size() * (1 - rho) / (1 + rho);
  EXPECT_NEAR(ess / expected, 1.0, 0.1);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
  auto a = Xoshiro256pp::stream(42, 3), b = Xoshiro256pp::stream(42, 3), c = Xoshiro256pp::stream(42, 4);
  for (int i = 0; i < 10; ++i) {
    const auto va = a(), vb = b(), vc = c();
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
  }
  Xoshiro256pp g(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = g.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  std::vector<double> a(1000), b(1000);
  parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = std::sin(double(i)); });
  parallel_for(b.size(), 4, [&](std::size_t i) { b[i] = std::sin(double(i)); });
  EXPECT_EQ(a, b);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
               std::runtime_error);
}
