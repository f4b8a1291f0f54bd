#ifndef MCLT_DPP_EXPERIMENT_HPP
#define MCLT_DPP_EXPERIMENT_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "mclt/charfn/ks.hpp"
#include "mclt/charfn/scan.hpp"
#include "mclt/dpp/fredholm.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/dpp/sampling.hpp"
#include "mclt/numeric/stats.hpp"

namespace mclt::dpp {

enum class DppBackend { Cumulant, Sampling };

struct DppCltOptions {
  DppBackend backend = DppBackend::Cumulant;
  double spacing = 0.0;  // 0: kernel scale / 4
  bool zero_scan = true;
  double scan_start = 0.5;
  double scan_cap = 4.0 * std::numbers::pi;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  std::size_t jobs = 0;
};

struct DppCltRow {
  double L = 0.0;
  int grid_points = 0;
  int rank = 0;
  double variance_formula = 0.0;
  std::optional<CumulantReport> cumulants;
  std::optional<double> empirical_ks;
  std::size_t samples = 0;
  std::optional<double> zero_free_radius;
  bool radius_certified = false;
};

struct DppCltResult {
  std::vector<DppCltRow> rows;
  std::optional<LinearFit> skewness_fit;  // log |κ₃|/σ³ vs log L
  std::optional<LinearFit> kurtosis_fit;  // log |κ₄|/σ⁴ vs log L
  std::optional<LinearFit> ks_fit;
  bool skewness_decreasing = false;
  double radius_spread = 0.0;  // max/min − 1 of the zero-free radii
  bool radius_uniform = false;  // spread below 20%
};

inline DppCltRow dpp_clt_row(const KernelSpec& spec, const TestFunction& phi, double L, const DppCltOptions& opt,
                             std::uint64_t seed) {
  const double h = opt.spacing > 0.0 ? opt.spacing : spec.scale / 4.0;
  auto dk = std::make_shared<const DiscretizedKernel>(discretize_window(spec, L, h));
  auto op = std::make_shared<const FredholmOperator>(dk, phi_values(*dk, phi, L), spec.alpha);
  DppCltRow row;
  row.L = L;
  row.grid_points = dk->size();
  row.rank = op->rank();
  row.variance_formula = linstat_variance_formula(*dk, op->phi(), spec.alpha);
  if (opt.backend == DppBackend::Cumulant) {
    row.cumulants = linstat_cumulants(*op, 0.0, L);
  } else {
    std::vector<Configuration> confs;
    if (spec.alpha == -1.0)
      confs = sample_dpp(*dk, opt.samples, seed, opt.jobs);
    else if (spec.alpha == 2.0)
      confs = sample_permanental_cox(*dk, 2.0, opt.samples, seed, opt.jobs);
    else if (spec.alpha == 0.0)
      confs = sample_poisson(*dk, opt.samples, seed, opt.jobs);
    else
      throw CapabilityError("dpp_clt_experiment: no sampler for alpha = " + std::to_string(spec.alpha) +
                            "; use the cumulant backend");
    std::vector<double> stat;
    stat.reserve(confs.size());
    for (const auto& c : confs) {
      double s = 0.0;
      for (int i : c) s += op->phi()(i);
      stat.push_back(s);
    }
    row.samples = stat.size();
    row.empirical_ks = empirical_ks(stat).studentized;
  }
  if (opt.zero_scan) {
    const CharFnModel m = fredholm_charfn_model(op);
    const double cap = std::min(opt.scan_cap, 0.999 * m.validity_radius);
    const auto scan = expanding_zero_scan(m, std::min(opt.scan_start, cap), cap, 24, opt.jobs);
    row.zero_free_radius = scan.zero_free_radius;
    row.radius_certified = scan.certified;
  }
  return row;
}

/// Λ(φ_L) over a range of L: standardized cumulants (cumulant backend) or
/// the studentized empirical KS distance of sampled statistics (sampling
/// backend), plus the zero-free radius of u ↦ E[e^{iuΛ(φ_L)}].
inline DppCltResult dpp_clt_experiment(const KernelSpec& spec, const TestFunction& phi, const std::vector<double>& Ls,
                                       const DppCltOptions& opt = {}) {
  if (Ls.empty()) throw ArgumentError("dpp_clt_experiment: no scales");
  DppCltResult res;
  for (std::size_t i = 0; i < Ls.size(); ++i) res.rows.push_back(dpp_clt_row(spec, phi, Ls[i], opt, opt.seed + i));
  std::vector<double> L, skew, kurt, ks, radii;
  for (const auto& r : res.rows) {
    L.push_back(r.L);
    if (r.cumulants) {
      skew.push_back(std::abs(r.cumulants->skewness));
      kurt.push_back(std::abs(r.cumulants->excess_kurtosis));
    }
    if (r.empirical_ks) ks.push_back(*r.empirical_ks);
    if (r.zero_free_radius) radii.push_back(*r.zero_free_radius);
  }
  auto positive = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
  };
  if (L.size() >= 2) {
    if (skew.size() == L.size() && positive(skew)) res.skewness_fit = loglog_fit(L, skew);
    if (kurt.size() == L.size() && positive(kurt)) res.kurtosis_fit = loglog_fit(L, kurt);
    if (ks.size() == L.size() && positive(ks)) res.ks_fit = loglog_fit(L, ks);
  }
  if (skew.size() == L.size()) {
    res.skewness_decreasing = true;
    for (std::size_t i = 1; i < skew.size(); ++i) res.skewness_decreasing = res.skewness_decreasing && skew[i] < skew[i - 1];
  }
  if (!radii.empty()) {
    const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
    res.radius_spread = *lo > 0.0 ? *hi / *lo - 1.0 : std::numeric_limits<double>::infinity();
    res.radius_uniform = res.radius_spread < 0.2;
  }
  return res;
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_EXPERIMENT_HPP
