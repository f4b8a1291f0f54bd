#ifndef MCLT_SPIN_METROPOLIS_HPP
#define MCLT_SPIN_METROPOLIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mclt/errors.hpp"
#include "mclt/numeric/parallel.hpp"
#include "mclt/numeric/random.hpp"
#include "mclt/numeric/stats.hpp"
#include "mclt/spin/model.hpp"

namespace mclt::spin {

struct MetropolisOptions {
  std::size_t n_samples = 10000;  // per chain
  std::size_t burn_in = 1000;     // sweeps discarded before recording
  std::size_t thinning = 1;       // sweeps between recorded samples
  std::size_t chains = 1;
  std::uint64_t seed = 0;
  bool store_configurations = false;
  double angle_step = 1.0;  // S¹: uniform perturbation half-width (radians)
  double cap_step = 0.5;    // S²: scale of the isotropic perturbation
  std::size_t jobs = 0;
};

struct SpinSampleSet {
  std::vector<std::vector<double>> configurations;  // site-major, only if stored
  std::vector<double> weights;                      // empty: uniform
  std::vector<double> total_spin;                   // S_Λ per sample, chains concatenated
  std::vector<std::size_t> chain_lengths;
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  double acceptance_rate = 0.0;
  int sites = 0;
  int components = 1;

  /// Sum of per-chain effective sample sizes of the total spin.
  double effective_sample_size() const {
    double ess = 0.0;
    std::size_t off = 0;
    for (std::size_t len : chain_lengths) {
      ess += mclt::effective_sample_size(std::span<const double>(total_spin).subspan(off, len));
      off += len;
    }
    return ess;
  }
};

namespace detail {

template <class Rng>
Components random_spin(const SpinMeasure& mu, Rng& g, std::discrete_distribution<int>& atoms) {
  switch (mu.kind) {
    case MeasureKind::Ising:
    case MeasureKind::Atomic: return {mu.atoms[atoms(g)], 0.0, 0.0};
    case MeasureKind::Circle: {
      const double th = 2.0 * std::numbers::pi * g.uniform();
      return {std::cos(th), std::sin(th), 0.0};
    }
    case MeasureKind::Sphere: {
      const double x = 2.0 * g.uniform() - 1.0, ph = 2.0 * std::numbers::pi * g.uniform();
      const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
      return {x, s * std::cos(ph), s * std::sin(ph)};
    }
  }
  return {};
}

struct ChainResult {
  std::vector<double> total;
  std::vector<std::vector<double>> configs;
  std::size_t accepted = 0, proposed = 0;
};

inline ChainResult run_chain(const SpinModel& m, const MetropolisOptions& opt, std::uint64_t chain) {
  auto g = Xoshiro256pp::stream(opt.seed, chain);
  const int n = m.sites(), N = m.components();
  std::discrete_distribution<int> atom_dist(m.measure.weights.begin(), m.measure.weights.end());
  std::normal_distribution<double> normal;
  std::vector<Components> s(n);
  for (auto& v : s) v = random_spin(m.measure, g, atom_dist);

  ChainResult res;
  res.total.reserve(opt.n_samples);
  // random-scan: a systematic sweep with flip proposals is periodic at β → 0
  auto sweep = [&] {
    for (int step = 0; step < n; ++step) {
      const int x = std::min(n - 1, static_cast<int>(g.uniform() * n));
      Components b{};
      for (int i = 0; i < N; ++i) b[i] = m.field[x][i].real();
      for (const auto& [y, e] : m.lattice.neighbours[x])
        for (int i = 0; i < N; ++i) b[i] += m.couplings[e][i] * s[y][i];
      Components prop = s[x];
      switch (m.measure.kind) {
        case MeasureKind::Ising: prop[0] = -s[x][0]; break;
        case MeasureKind::Atomic: prop[0] = m.measure.atoms[atom_dist(g)]; break;
        case MeasureKind::Circle: {
          const double th = std::atan2(s[x][1], s[x][0]) + opt.angle_step * (2.0 * g.uniform() - 1.0);
          prop = {std::cos(th), std::sin(th), 0.0};
          break;
        }
        case MeasureKind::Sphere: {
          // isotropic perturbation then projection: the kernel depends only
          // on the angle between old and new spin, hence is symmetric
          double r2 = 0.0;
          for (int i = 0; i < 3; ++i) {
            prop[i] = s[x][i] + opt.cap_step * normal(g);
            r2 += prop[i] * prop[i];
          }
          const double r = std::sqrt(r2);
          for (int i = 0; i < 3; ++i) prop[i] /= r;
          break;
        }
      }
      double dH = 0.0;
      for (int i = 0; i < N; ++i) dH -= b[i] * (prop[i] - s[x][i]);
      ++res.proposed;
      if (dH <= 0.0 || g.uniform() < std::exp(-m.beta * dH)) {
        s[x] = prop;
        ++res.accepted;
      }
    }
  };
  for (std::size_t k = 0; k < opt.burn_in; ++k) sweep();
  for (std::size_t k = 0; k < opt.n_samples; ++k) {
    for (std::size_t t = 0; t < std::max<std::size_t>(1, opt.thinning); ++t) sweep();
    double S = 0.0;
    for (int x = 0; x < n; ++x) S += s[x][0];
    res.total.push_back(S);
    if (opt.store_configurations) {
      std::vector<double> cfg(static_cast<std::size_t>(n) * N);
      for (int x = 0; x < n; ++x)
        for (int i = 0; i < N; ++i) cfg[x * N + i] = s[x][i];
      res.configs.push_back(std::move(cfg));
    }
  }
  return res;
}

}  // namespace detail

/// Single-site Metropolis sampling of the Gibbs measure e^{−βH}Π dμ₀. A
/// sweep is |Λ| updates at uniformly chosen sites. Chain k uses RNG stream k of the master seed (k jumps
/// of xoshiro256++), so output depends only on (seed, chains).
inline SpinSampleSet metropolis_sample(const SpinModel& m, const MetropolisOptions& opt) {
  if (opt.n_samples == 0 || opt.chains == 0) throw ArgumentError("metropolis_sample: need samples and chains");
  if (!m.real_field()) throw ArgumentError("metropolis_sample: field must be real");
  std::vector<detail::ChainResult> chains(opt.chains);
  parallel_for(opt.chains, opt.jobs, [&](std::size_t c) { chains[c] = detail::run_chain(m, opt, c); });
  SpinSampleSet out;
  out.seed = opt.seed;
  out.burn_in = opt.burn_in;
  out.thinning = opt.thinning;
  out.sites = m.sites();
  out.components = m.components();
  std::size_t acc = 0, prop = 0;
  for (auto& c : chains) {
    out.chain_lengths.push_back(c.total.size());
    out.total_spin.insert(out.total_spin.end(), c.total.begin(), c.total.end());
    for (auto& cfg : c.configs) out.configurations.push_back(std::move(cfg));
    acc += c.accepted;
    prop += c.proposed;
  }
  out.acceptance_rate = prop ? static_cast<double>(acc) / prop : 0.0;
  return out;
}

struct CorrelationReport {
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd std_error;
  double min_covariance = 0.0;
  double min_standardized = 0.0;  // min over pairs of cov / s.e.
  bool consistent_with_nonnegative = true;
  bool low_sample_warning = false;
};

/// Pair covariances Cov(σ_x¹, σ_y¹) with ESS-adjusted standard errors.
inline CorrelationReport spin_correlation_check(const SpinSampleSet& samples, std::size_t min_samples = 1000) {
  if (samples.configurations.empty())
    throw ArgumentError("spin_correlation_check: sample set has no stored configurations");
  const int n = samples.sites, N = samples.components;
  const std::size_t T = samples.configurations.size();
  CorrelationReport rep;
  rep.low_sample_warning = T < min_samples;
  rep.covariance = Eigen::MatrixXd::Zero(n, n);
  rep.std_error = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::vector<double>> col(n, std::vector<double>(T));
  std::vector<double> mu(n);
  for (int x = 0; x < n; ++x) {
    for (std::size_t t = 0; t < T; ++t) col[x][t] = samples.configurations[t][x * N];
    mu[x] = mean(col[x]);
  }
  rep.min_covariance = std::numeric_limits<double>::infinity();
  rep.min_standardized = std::numeric_limits<double>::infinity();
  std::vector<double> prod(T);
  for (int x = 0; x < n; ++x)
    for (int y = x; y < n; ++y) {
      for (std::size_t t = 0; t < T; ++t) prod[t] = (col[x][t] - mu[x]) * (col[y][t] - mu[y]);
      const double c = mean(prod);
      double ess = 0.0;
      std::size_t off = 0;
      for (std::size_t len : samples.chain_lengths) {
        if (off + len > T) break;
        ess += effective_sample_size(std::span<const double>(prod).subspan(off, len));
        off += len;
      }
      if (ess <= 0.0) ess = static_cast<double>(T);
      const double se = std::sqrt(variance(prod) / ess);
      rep.covariance(x, y) = rep.covariance(y, x) = c;
      rep.std_error(x, y) = rep.std_error(y, x) = se;
      if (x != y) {
        rep.min_covariance = std::min(rep.min_covariance, c);
        if (se > 0.0) rep.min_standardized = std::min(rep.min_standardized, c / se);
        if (c < -3.0 * se) rep.consistent_with_nonnegative = false;
      }
    }
  if (n == 1) rep.min_covariance = rep.covariance(0, 0);
  return rep;
}

}  // namespace mclt::spin

#endif  // MCLT_SPIN_METROPOLIS_HPP
