#ifndef MCLT_NUMERIC_STATS_HPP
#define MCLT_NUMERIC_STATS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "mclt/errors.hpp"

namespace mclt {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// log⁺x = max(0, log x); log⁺ of a nonpositive number is 0.
inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

inline double mean(std::span<const double> x) {
  if (x.empty()) throw ArgumentError("mean: empty input");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (n-1 denominator); 0 for a single value.
inline double variance(std::span<const double> x) {
  const double m = mean(x);
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  std::size_t n = 0;

  /// Two-sided Student-t confidence interval for the slope.
  std::pair<double, double> slope_ci(double level = 0.95) const {
    if (n <= 2 || !(slope_se > 0.0)) return {slope, slope};
    boost::math::students_t dist(static_cast<double>(n - 2));
    const double q = boost::math::quantile(dist, 0.5 + 0.5 * level);
    return {slope - q * slope_se, slope + q * slope_se};
  }
};

/// Ordinary least squares y = intercept + slope·x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("linear_fit: size mismatch");
  if (x.size() < 2) throw ArgumentError("linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ArgumentError("linear_fit: all x values coincide");
  LinearFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    sse += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) {
    const double s2 = sse / (n - 2.0);
    fit.slope_se = std::sqrt(s2 / sxx);
    fit.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return fit;
}

/// Fit of log y against log x.
inline LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw ArgumentError("loglog_fit: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

/// Effective sample size of a stationary series using Geyer's initial
/// positive sequence estimator of the integrated autocorrelation time.
inline double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double m = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    return s / static_cast<double>(n);
  };
  // tau = -1 + 2 Σ_k Γ_k with Γ_k = ρ_{2k} + ρ_{2k+1}, stopped at the first
  // nonpositive pair and forced monotone.
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double gamma = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    tau += 2.0 * gamma;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return static_cast<double>(n) / tau;
}

}  // namespace mclt

#endif  // MCLT_NUMERIC_STATS_HPP
