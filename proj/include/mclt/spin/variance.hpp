#ifndef MCLT_SPIN_VARIANCE_HPP
#define MCLT_SPIN_VARIANCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mclt/numeric/optimize.hpp"
#include "mclt/spin/exact.hpp"
#include "mclt/spin/model.hpp"

namespace mclt::spin {

struct VarianceFloorReport {
  double M = 0.0;
  double floor = 0.0;
  std::vector<double> argmin;
  /// |σ¹| is constant μ₀-a.s. (e.g. Ising); the floor is still the exact
  /// minimum of the tilted single-site variance, which stays positive.
  bool degenerate_support_caveat = false;
};

/// F(u) = f/h − (g/h)²: variance of σ¹ under μ₀ tilted by e^{u·σ}.
inline double tilted_variance(const SiteNodes& nodes, int N, const std::vector<double>& u) {
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> e(nodes.size());
  for (int a = 0; a < nodes.size(); ++a) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += u[i] * nodes.coords[a][i];
    top = std::max(top, e[a] = s);
  }
  double f = 0.0, g = 0.0, h = 0.0;
  for (int a = 0; a < nodes.size(); ++a) {
    const double w = nodes.weights[a] * std::exp(e[a] - top), x = nodes.coords[a][0];
    f += w * x * x;
    g += w * x;
    h += w;
  }
  return std::max(0.0, f / h - (g / h) * (g / h));
}

/// min_{|u_i| ≤ M} F(u) for an explicit tilt bound M: dense grid, then a
/// box-constrained local refinement from the best grid point.
inline VarianceFloorReport variance_floor_for_tilt(const SpinMeasure& mu, double M,
                                                   const QuadratureOptions& q = {}) {
  if (M < 0.0) throw ArgumentError("variance_floor_for_tilt: M must be nonnegative");
  const SiteNodes nodes = site_nodes(mu, q);
  const int N = mu.components();
  VarianceFloorReport rep;
  rep.M = M;
  if (mu.is_discrete()) {
    const double a0 = std::abs(mu.atoms[0]);
    rep.degenerate_support_caveat = std::all_of(mu.atoms.begin(), mu.atoms.end(),
                                                [&](double a) { return std::abs(std::abs(a) - a0) < 1e-12; });
  }
  const int per_axis = N == 1 ? 401 : (N == 2 ? 61 : 21);
  std::vector<double> u(N, 0.0), best_u(N, 0.0);
  double best = tilted_variance(nodes, N, u);
  if (M > 0.0) {
    std::vector<int> k(N, 0);
    for (;;) {
      for (int i = 0; i < N; ++i) u[i] = -M + 2.0 * M * k[i] / (per_axis - 1);
      const double v = tilted_variance(nodes, N, u);
      if (v < best) {
        best = v;
        best_u = u;
      }
      int i = 0;
      while (i < N && ++k[i] == per_axis) k[i++] = 0;
      if (i == N) break;
    }
    const std::vector<double> lo(N, -M), hi(N, M);
    const auto opt = nelder_mead_min([&](const std::vector<double>& p) { return tilted_variance(nodes, N, p); },
                                     best_u, M / (per_axis - 1), lo, hi, 1e-15, 4000);
    if (opt.value < best) {
      best = opt.value;
      best_u = opt.x;
    }
  }
  rep.floor = best;
  rep.argmin = best_u;
  return rep;
}

/// Uniform lower bound on Var[σ_x¹ | rest] over the model's possible local
/// tilts. The tilt of site x is β(h_x + Σ_{y~x} J_xy σ_y), bounded
/// componentwise by M = β(H + 2d·J·s_max) with H = max|h^i|, J = max|J^i| and
/// s_max the largest spin component on the support.
inline VarianceFloorReport conditional_variance_floor(const SpinModel& m, const QuadratureOptions& q = {}) {
  double H = 0.0, J = 0.0;
  for (const auto& h : m.field)
    for (const auto& c : h) H = std::max(H, std::abs(c));
  for (const auto& c : m.couplings)
    for (double v : c) J = std::max(J, std::abs(v));
  const double M = m.beta * (H + 2.0 * m.lattice.dim * J * m.measure.support_bound());
  return variance_floor_for_tilt(m.measure, M, q);
}

}  // namespace mclt::spin

#endif  // MCLT_SPIN_VARIANCE_HPP
