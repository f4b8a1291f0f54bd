#ifndef MCLT_NUMERIC_QUADRATURE_HPP
#define MCLT_NUMERIC_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "mclt/errors.hpp"

namespace mclt {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Gauss–Legendre rule mapped to [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

/// Composite Gauss–Legendre: `panels` equal panels of `order` points each.
inline QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b) {
  if (panels < 1) throw ArgumentError("composite_gauss_legendre: panels must be positive");
  const QuadratureRule ref = gauss_legendre(order);
  QuadratureRule out;
  out.nodes.reserve(static_cast<std::size_t>(order) * panels);
  out.weights.reserve(out.nodes.capacity());
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    for (int i = 0; i < order; ++i) {
      out.nodes.push_back(lo + 0.5 * width * (ref.nodes[i] + 1.0));
      out.weights.push_back(0.5 * width * ref.weights[i]);
    }
  }
  return out;
}

/// Equispaced periodic trapezoid rule on [0, 2π): spectrally accurate for
/// smooth periodic integrands.
inline QuadratureRule periodic_trapezoid(int n) {
  if (n < 1) throw ArgumentError("periodic_trapezoid: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.assign(n, 2.0 * std::numbers::pi / n);
  for (int k = 0; k < n; ++k) rule.nodes[k] = 2.0 * std::numbers::pi * k / n;
  return rule;
}

}  // namespace mclt

#endif  // MCLT_NUMERIC_QUADRATURE_HPP
