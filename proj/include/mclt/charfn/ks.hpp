#ifndef MCLT_CHARFN_KS_HPP
#define MCLT_CHARFN_KS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "mclt/charfn/model.hpp"
#include "mclt/charfn/scan.hpp"
#include "mclt/numeric/quadrature.hpp"
#include "mclt/numeric/stats.hpp"

namespace mclt {

struct KSBoundReport {
  double r = 0.0;
  double sigma_term = 0.0;
  double bracket_term = 0.0;
  double constant_A = 1.0;
  double bound = 0.0;
  std::optional<double> empirical_ks;
  bool degenerate = false;
  /// log max_{|t|=r} |Ψ(t)|, kept for diagnostics.
  double log_circle_max = 0.0;
};

/// 2|σ−1| + A(1 + log⁺log max_{|t|=r}|Ψ(t)|)/r.
///
/// The radius must lie inside the zero-free disk of Ψ. Pass a radius already
/// certified by zero_free_radius, or leave it empty to scan [0, r] here.
inline KSBoundReport ks_bound(const CharFnModel& m, double r, double A = 1.0,
                              std::optional<double> certified_radius = std::nullopt,
                              std::size_t jobs = 0) {
  if (!(r > 0.0)) throw ArgumentError("ks_bound: r must be positive");
  if (!(A > 0.0)) throw ArgumentError("ks_bound: A must be positive");
  if (!certified_radius) {
    const auto scan = zero_free_radius(m, r, r / 32.0, 1e-9, jobs);
    if (scan.certified) certified_radius = scan.zero_free_radius;
    else certified_radius = 0.0;
    // a zero exactly at distance r still violates the closed-disk hypothesis
    if (scan.nearest_zero && std::abs(*scan.nearest_zero) <= r) certified_radius = 0.0;
  }
  if (r > *certified_radius)
    throw PreconditionError("ks_bound: r = " + std::to_string(r) +
                            " exceeds the certified zero-free radius " +
                            std::to_string(*certified_radius));
  KSBoundReport rep;
  rep.r = r;
  rep.constant_A = A;
  rep.degenerate = !(m.std_dev > 0.0);
  rep.sigma_term = 2.0 * std::abs(m.std_dev - 1.0);
  rep.log_circle_max = circle_log_max(m, r, jobs).first;
  // log⁺ log M with log M already in hand
  rep.bracket_term = (1.0 + log_plus(rep.log_circle_max)) / r;
  rep.bound = rep.sigma_term + A * rep.bracket_term;
  return rep;
}

struct EmpiricalKS {
  double centered = 0.0;     ///< sup|F_n(x) − Φ(x)| after subtracting the sample mean
  double studentized = 0.0;  ///< same after also dividing by the sample std (NaN if it is 0)
  double sample_mean = 0.0;
  double sample_sd = 0.0;
};

namespace detail {

/// sup|F − Φ| for a discrete law given by sorted atoms and probabilities.
inline double ks_atoms_sorted(std::span<const double> atoms, std::span<const double> probs) {
  double cum = 0.0, sup = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double phi = normal_cdf(atoms[k]);
    sup = std::max(sup, std::abs(phi - cum));
    cum += probs[k];
    sup = std::max(sup, std::abs(std::min(cum, 1.0) - phi));
  }
  return sup;
}

inline double ks_sorted_samples(std::span<const double> x, double shift, double scale) {
  const std::size_t n = x.size();
  double sup = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && x[j] == x[i]) ++j;
    const double phi = normal_cdf((x[i] - shift) / scale);
    sup = std::max({sup, std::abs(phi - static_cast<double>(i) / n),
                    std::abs(static_cast<double>(j) / n - phi)});
    i = j;
  }
  return sup;
}

}  // namespace detail

/// KS distance between the empirical law of the samples and Φ, evaluated
/// exactly at the jump points.
inline EmpiricalKS empirical_ks(std::vector<double> samples) {
  if (samples.empty()) throw ArgumentError("empirical_ks: no samples");
  std::sort(samples.begin(), samples.end());
  EmpiricalKS out;
  out.sample_mean = mean(samples);
  out.sample_sd = std::sqrt(variance(samples));
  out.centered = detail::ks_sorted_samples(samples, out.sample_mean, 1.0);
  out.studentized = out.sample_sd > 0.0
                        ? detail::ks_sorted_samples(samples, out.sample_mean, out.sample_sd)
                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// Exact KS distance of a discrete law (atoms need not be sorted).
inline double empirical_ks(std::span<const double> atoms, std::span<const double> probs) {
  if (atoms.empty() || atoms.size() != probs.size())
    throw ArgumentError("empirical_ks: atoms and probabilities must be nonempty and aligned");
  std::vector<std::size_t> idx(atoms.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return atoms[a] < atoms[b]; });
  std::vector<double> a, p;
  for (auto i : idx) {
    if (!a.empty() && a.back() == atoms[i]) p.back() += probs[i];
    else {
      a.push_back(atoms[i]);
      p.push_back(probs[i]);
    }
  }
  return detail::ks_atoms_sorted(a, p);
}

/// sup|F − Φ| for a continuous CDF, evaluated on an equispaced grid of
/// [lo, hi] (both CDFs are within 1e−23 of 0 or 1 outside [−10, 10]).
inline double empirical_ks(const std::function<double(double)>& cdf, double lo = -10.0,
                           double hi = 10.0, int points = 200001) {
  if (points < 2 || !(hi > lo)) throw ArgumentError("empirical_ks: bad grid");
  double sup = 0.0;
  for (int k = 0; k < points; ++k) {
    const double x = lo + (hi - lo) * k / (points - 1);
    sup = std::max(sup, std::abs(cdf(x) - normal_cdf(x)));
  }
  return sup;
}

/// Exact KS distance of X − E X for a model that carries its lattice law.
inline double exact_ks(const CharFnModel& m) {
  if (m.atoms.empty()) throw CapabilityError("exact_ks: model has no exact lattice law");
  std::vector<double> a = m.atoms;
  for (double& x : a) x -= m.mean;
  return empirical_ks(a, m.probs);
}

/// 2∫_0^T |Ψ(t) − e^{−t²/2}|/t dt + 1/T: the smoothing-inequality bracket
/// without its universal prefactor (the integrand is even in t).
inline double smoothing_ks_bound(const CharFnModel& m, double T, int quad_points = 512) {
  if (!(T > 0.0)) throw ArgumentError("smoothing_ks_bound: T must be positive");
  if (quad_points < 1) throw ArgumentError("smoothing_ks_bound: quad_points must be positive");
  if (std::abs(m.mean) > 1e-9 || std::abs(m.std_dev - 1.0) > 1e-9)
    throw PreconditionError(
        "smoothing_ks_bound: integrand singular at 0 unless the model is centered with unit "
        "variance");
  const int order = std::min(quad_points, 32);
  const int panels = std::max(1, quad_points / order);
  const auto rule = composite_gauss_legendre(order, panels, 0.0, T);
  double integral = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double t = rule.nodes[k];
    const cplx diff = m.charfn(t) - std::exp(-0.5 * t * t);
    integral += rule.weights[k] * std::abs(diff) / t;
  }
  return 2.0 * integral + 1.0 / T;
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double bound_slope = 0.0;
  double bound_intercept = 0.0;
  double bound_r_squared = 0.0;
};

/// Least-squares fits of log(empirical KS) and log(bound) against log n.
inline RateFit clt_rate_fit(const std::vector<std::pair<double, KSBoundReport>>& reports) {
  if (reports.size() < 3) throw ArgumentError("clt_rate_fit: need at least 3 reports");
  std::set<double> distinct;
  std::vector<double> n, ks, bound;
  for (const auto& [scale, rep] : reports) {
    if (!rep.empirical_ks) throw ArgumentError("clt_rate_fit: report without empirical_ks");
    distinct.insert(scale);
    n.push_back(scale);
    ks.push_back(*rep.empirical_ks);
    bound.push_back(rep.bound);
  }
  if (distinct.size() < 3) throw ArgumentError("clt_rate_fit: need 3 distinct scale values");
  const auto f = loglog_fit(n, ks);
  const auto g = loglog_fit(n, bound);
  RateFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r_squared = f.r_squared;
  std::tie(out.slope_ci_low, out.slope_ci_high) = f.slope_ci();
  out.bound_slope = g.slope;
  out.bound_intercept = g.intercept;
  out.bound_r_squared = g.r_squared;
  return out;
}

}  // namespace mclt

#endif  // MCLT_CHARFN_KS_HPP
