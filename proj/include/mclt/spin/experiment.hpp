#ifndef MCLT_SPIN_EXPERIMENT_HPP
#define MCLT_SPIN_EXPERIMENT_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "mclt/charfn/ks.hpp"
#include "mclt/charfn/scan.hpp"
#include "mclt/numeric/stats.hpp"
#include "mclt/spin/exact.hpp"
#include "mclt/spin/metropolis.hpp"
#include "mclt/spin/model.hpp"

namespace mclt::spin {

/// A model family indexed by the side length ℓ.
struct SpinFamily {
  int dim = 1;
  SpinMeasure measure = SpinMeasure::ising();
  Components coupling{1.0, 0.0, 0.0};
  ComplexComponents field{0.2, 0.0, 0.0};
  double beta = 0.5;
  bool periodic = false;

  SpinModel at(int side) const { return make_model(dim, side, measure, coupling, field, beta, periodic); }
};

struct SpinCltOptions {
  MetropolisOptions mc;
  double target_ess = 1e4;  // sample count doubles until the ESS reaches this
  int max_doublings = 8;
  bool exact_bound = true;  // exact-law KS bound where the law is computable
  double A = 1.0;
};

struct SpinCltRow {
  int side = 0;
  int sites = 0;
  std::size_t samples = 0;
  double ess = 0.0;
  double acceptance = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  KSBoundReport report;  // empirical_ks always set; bound fields only with exact law
  bool has_bound = false;
  std::optional<double> exact_variance;
  std::optional<double> exact_ks;
  std::optional<double> zero_free_radius;  // of the standardized total spin
};

struct SpinCltResult {
  std::vector<SpinCltRow> rows;
  LinearFit variance_fit;  // log Var vs log |Λ|
  LinearFit ks_fit;        // log KS vs log |Λ|
};

inline SpinCltRow spin_clt_row(const SpinFamily& fam, int side, const SpinCltOptions& opt) {
  const SpinModel m = fam.at(side);
  SpinCltRow row;
  row.side = side;
  row.sites = m.sites();
  MetropolisOptions mc = opt.mc;
  SpinSampleSet set;
  for (int k = 0;; ++k) {
    set = metropolis_sample(m, mc);
    row.ess = set.effective_sample_size();
    if (row.ess >= opt.target_ess || k >= opt.max_doublings) break;
    // rough scaling of the needed length from the observed ESS per sample
    const double factor = std::clamp(1.2 * opt.target_ess / std::max(row.ess, 1.0), 2.0, 16.0);
    mc.n_samples = static_cast<std::size_t>(std::ceil(mc.n_samples * factor));
  }
  row.samples = set.total_spin.size();
  row.acceptance = set.acceptance_rate;
  row.variance = variance(set.total_spin);
  // Var of the sample variance ≈ (μ₄ − σ⁴)/n; autocorrelation via ESS
  {
    const double mu = mean(set.total_spin);
    double m4 = 0.0;
    for (double s : set.total_spin) m4 += std::pow(s - mu, 4);
    m4 /= static_cast<double>(set.total_spin.size());
    row.variance_se = std::sqrt(std::max(0.0, m4 - row.variance * row.variance) / std::max(row.ess, 1.0));
  }
  row.report.empirical_ks = empirical_ks(set.total_spin).studentized;
  row.report.constant_A = opt.A;

  const bool law_ok = m.measure.is_discrete() &&
                      ((m.lattice.dim == 1 && !m.lattice.periodic) ||
                       std::pow(static_cast<double>(m.measure.atoms.size()), m.sites()) <= (1 << 22));
  if (opt.exact_bound && law_ok) {
    const CharFnModel total = spin_total_model(m);
    row.exact_variance = total.std_dev * total.std_dev;
    if (total.std_dev > 0.0) row.exact_ks = exact_ks(models::standardized(total));
    if (total.std_dev > 0.0) {
      const CharFnModel z = models::standardized(total);
      // Ψ_S is 2π/spacing-periodic along the real axis; zeros off the real
      // axis sit within |u| ≤ π/2 for ±1 lattice spins
      const auto scan = expanding_zero_scan(z, 0.05 * total.std_dev, 0.5 * std::numbers::pi * total.std_dev,
                                            24, mc.jobs);
      row.zero_free_radius = scan.zero_free_radius;
      if (scan.certified && scan.zero_free_radius > 0.0) {
        const double r = 0.9 * scan.zero_free_radius;
        const double emp = *row.report.empirical_ks;
        row.report = ks_bound(z, r, opt.A, scan.zero_free_radius, mc.jobs);
        row.report.empirical_ks = emp;
        row.has_bound = true;
      }
    }
  }
  return row;
}

/// Samples S_Λ for each side length, studentizes, and fits the variance and
/// KS exponents against |Λ|.
inline SpinCltResult spin_clt_experiment(const SpinFamily& fam, const std::vector<int>& sides,
                                         const SpinCltOptions& opt) {
  if (sides.empty()) throw ArgumentError("spin_clt_experiment: no sizes");
  SpinCltResult res;
  std::vector<double> n, v, ks;
  for (int side : sides) {
    res.rows.push_back(spin_clt_row(fam, side, opt));
    const auto& r = res.rows.back();
    n.push_back(r.sites);
    v.push_back(r.variance);
    ks.push_back(*r.report.empirical_ks);
  }
  if (sides.size() >= 2) {
    res.variance_fit = loglog_fit(n, v);
    res.ks_fit = loglog_fit(n, ks);
  }
  return res;
}

}  // namespace mclt::spin

#endif  // MCLT_SPIN_EXPERIMENT_HPP
