#ifndef MCLT_DPP_VARIANCE_HPP
#define MCLT_DPP_VARIANCE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mclt/dpp/fredholm.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/numeric/parallel.hpp"
#include "mclt/numeric/stats.hpp"

namespace mclt::dpp {

/// Var Λ(φ_L) by midpoint quadrature on [−L, L]^d with n cells per axis.
/// Radial kernels with f ≡ 1 take a lattice shortcut: K² only depends on the
/// index offset, so the double sum becomes Σ_Δ K²(Δ)·A_φ(Δ) with the
/// autocorrelation A_φ of the grid values, and no m×m matrix is formed.
inline double variance_on_grid(const KernelSpec& k, const TestFunction& phi, double L, int n, std::size_t jobs = 0) {
  if (!(L > 0.0) || n < 1) throw ArgumentError("variance_on_grid: need L > 0 and n ≥ 1");
  const int d = k.dim;
  if (!k.radial() || k.density) {
    const DiscretizedKernel dk =
        discretize(k, std::vector<double>(d, -L), std::vector<double>(d, L), std::vector<int>(d, n));
    return linstat_variance_formula(dk, phi_values(dk, phi, L), k.alpha);
  }
  if (d > 3) throw CapabilityError("variance_on_grid: lattice shortcut implemented for d ≤ 3");
  const double h = 2.0 * L / n;
  const double w = std::pow(h, d);
  long m = 1;
  for (int i = 0; i < d; ++i) m *= n;
  // grid values of φ_L, index = Σ c_i n^i
  std::vector<double> val(m);
  std::vector<double> x(d);
  for (long idx = 0; idx < m; ++idx) {
    long r = idx;
    for (int i = 0; i < d; ++i) {
      x[i] = (-L + (r % n + 0.5) * h) / L;
      r /= n;
    }
    val[idx] = phi(x);
  }
  double first = 0.0;
  for (double v : val) first += v * v;
  first *= k.profile(0.0) * w;
  if (k.alpha == 0.0) return first;

  // offsets Δ ∈ [0, n)×(−n, n)^{d−1}, symmetric under Δ → −Δ: walk the
  // half-space with a first nonzero component positive, count it twice
  const int span = 2 * n - 1;
  long offsets = 1;
  for (int i = 0; i < d; ++i) offsets *= span;
  std::vector<double> partial(offsets, 0.0);
  parallel_for(static_cast<std::size_t>(offsets), jobs, [&](std::size_t oi) {
    int delta[3] = {0, 0, 0};
    long r = static_cast<long>(oi);
    for (int i = 0; i < d; ++i) {
      delta[i] = static_cast<int>(r % span) - (n - 1);
      r /= span;
    }
    // canonical half: first nonzero component > 0, or Δ = 0
    int lead = 0;
    for (int i = d - 1; i >= 0; --i)
      if (delta[i] != 0) lead = delta[i];
    if (lead < 0) return;
    double dist2 = 0.0;
    for (int i = 0; i < d; ++i) dist2 += static_cast<double>(delta[i]) * delta[i];
    const double kv = k.profile(h * std::sqrt(dist2));
    if (kv == 0.0) return;
    // A(Δ) = Σ_c φ(c) φ(c+Δ)
    int lo[3] = {0, 0, 0}, hi[3] = {1, 1, 1};
    for (int i = 0; i < d; ++i) {
      lo[i] = std::max(0, -delta[i]);
      hi[i] = std::min(n, n - delta[i]);
    }
    long stride[3] = {1, n, static_cast<long>(n) * n};
    const long shift = delta[0] + (d > 1 ? delta[1] * stride[1] : 0) + (d > 2 ? delta[2] * stride[2] : 0);
    double acc = 0.0;
    for (int c2 = lo[2]; c2 < (d > 2 ? hi[2] : 1); ++c2)
      for (int c1 = lo[1]; c1 < (d > 1 ? hi[1] : 1); ++c1) {
        const long base = c1 * stride[1] + c2 * stride[2];
        for (int c0 = lo[0]; c0 < hi[0]; ++c0) acc += val[base + c0] * val[base + c0 + shift];
      }
    partial[oi] = (lead == 0 ? 1.0 : 2.0) * kv * kv * acc;
  });
  double second = 0.0;
  for (double p : partial) second += p;
  return first + k.alpha * w * w * second;
}

/// Exponent of Var Λ(φ_L) ~ L^γ expected for the model class: d for α ≥ 0
/// (class (i) and Poisson), 2(d − β) with β = (d+1)/2 for the ball-Fourier
/// kernel (class (ii.b)), and the lower-bound exponent d − 4 for other α < 0
/// kernels (class (ii.a)).
inline double predicted_variance_exponent(const KernelSpec& k, std::string* model_class = nullptr) {
  const int d = k.dim;
  if (k.alpha >= 0.0) {
    if (model_class) *model_class = k.alpha > 0.0 ? "(i)" : "poisson";
    return d;
  }
  if (k.family == KernelFamily::BallFourier) {
    if (model_class) *model_class = "(ii.b)";
    return 2.0 * (d - 0.5 * (d + 1));
  }
  if (model_class) *model_class = "(ii.a)";
  return d - 4.0;
}

struct VarianceScalingOptions {
  double spacing = 0.0;  // grid spacing; 0 picks scale/4 (scale/8 for the ball-Fourier kernel's oscillation)
  double tolerance = 0.02;
  std::size_t jobs = 0;
};

struct VarianceScalingResult {
  std::vector<double> L;
  std::vector<double> variance;
  std::vector<double> resolution_error;  // |Var(h) − Var(2h)| / Var(h)
  LinearFit fit;
  double exponent = 0.0;
  double r2 = 0.0;
  double predicted = 0.0;
  std::string model_class;
};

inline double default_variance_spacing(const KernelSpec& k) {
  return k.scale / (k.family == KernelFamily::BallFourier ? 8.0 : 4.0);
}

struct VarianceAtScale {
  double L = 0.0;
  int cells = 0;  // per axis on the fine grid
  double variance = 0.0;
  double coarse_variance = 0.0;
  double resolution_error = 0.0;
};

/// Var Λ(φ_L) on the spacing-h grid and on the 2h grid; throws
/// NumericalError when they differ by more than the tolerance.
inline VarianceAtScale variance_at_scale(const KernelSpec& k, const TestFunction& phi, double L,
                                         const VarianceScalingOptions& opt = {}) {
  const double h = opt.spacing > 0.0 ? opt.spacing : default_variance_spacing(k);
  VarianceAtScale v;
  v.L = L;
  v.cells = static_cast<int>(std::ceil(2.0 * L / h - 1e-9));
  v.cells += v.cells % 2;  // even, so the coarse grid nests
  v.variance = variance_on_grid(k, phi, L, v.cells, opt.jobs);
  v.coarse_variance = variance_on_grid(k, phi, L, v.cells / 2, opt.jobs);
  v.resolution_error = std::abs(v.variance - v.coarse_variance) / std::abs(v.variance);
  if (!(v.variance > 0.0) || !(v.resolution_error < opt.tolerance))
    throw NumericalError("variance_scaling_fit: resolution check failed at L = " + std::to_string(L),
                         v.resolution_error);
  return v;
}

/// Fits log Var(Λ(φ_L)) against log L. The spacing stays fixed in absolute
/// units, so the number of cells grows with L; each scale is recomputed on
/// the 2h grid and fails loudly when the two differ by more than the
/// tolerance.
inline VarianceScalingResult variance_scaling_fit(const KernelSpec& k, const TestFunction& phi,
                                                  const std::vector<double>& Ls,
                                                  const VarianceScalingOptions& opt = {}) {
  if (Ls.size() < 3) throw ArgumentError("variance_scaling_fit: need at least 3 scales");
  VarianceScalingResult res;
  res.predicted = predicted_variance_exponent(k, &res.model_class);
  for (double L : Ls) {
    const auto v = variance_at_scale(k, phi, L, opt);
    res.L.push_back(L);
    res.variance.push_back(v.variance);
    res.resolution_error.push_back(v.resolution_error);
  }
  res.fit = loglog_fit(res.L, res.variance);
  res.exponent = res.fit.slope;
  res.r2 = res.fit.r_squared;
  return res;
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_VARIANCE_HPP
