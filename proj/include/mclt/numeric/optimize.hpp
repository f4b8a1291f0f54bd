#ifndef MCLT_NUMERIC_OPTIMIZE_HPP
#define MCLT_NUMERIC_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

namespace mclt {

struct ScalarOptimum {
  double x;
  double value;
};

/// Golden-section search for a maximum of a unimodal f on [a, b].
template <class F>
ScalarOptimum golden_section_max(F&& f, double a, double b, double tol = 1e-12,
                                 int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && std::abs(b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? ScalarOptimum{c, fc} : ScalarOptimum{d, fd};
}

struct VectorOptimum {
  std::vector<double> x;
  double value;
};

/// Nelder–Mead minimisation with optional box constraints (points are clamped
/// into [lo, hi] before evaluation).
template <class F>
VectorOptimum nelder_mead_min(F&& f, std::vector<double> start, double initial_step,
                              const std::vector<double>& lo = {},
                              const std::vector<double>& hi = {}, double ftol = 1e-14,
                              int max_iter = 2000) {
  const std::size_t n = start.size();
  auto clamp = [&](std::vector<double> p) {
    if (!lo.empty())
      for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    return p;
  };
  std::vector<std::vector<double>> simplex(n + 1, clamp(start));
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += initial_step;
    simplex[i + 1] = clamp(simplex[i + 1]);
    if (simplex[i + 1] == simplex[0]) {
      simplex[i + 1][i] -= 2 * initial_step;
      simplex[i + 1] = clamp(simplex[i + 1]);
    }
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  for (int it = 0; it < max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (std::abs(values[worst] - values[best]) <=
        ftol * (std::abs(values[best]) + std::abs(values[worst])) + 1e-300)
      break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / n;
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return clamp(p);
    };
    auto reflected = along(-1.0);
    const double fr = f(reflected);
    if (fr < values[best]) {
      auto expanded = along(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      auto contracted = along(fr < values[worst] ? -0.5 : 0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k)
            simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
          simplex[i] = clamp(simplex[i]);
          values[i] = f(simplex[i]);
        }
      }
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  return {simplex[static_cast<std::size_t>(it - values.begin())], *it};
}

}  // namespace mclt

#endif  // MCLT_NUMERIC_OPTIMIZE_HPP
