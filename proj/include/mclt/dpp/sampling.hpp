#ifndef MCLT_DPP_SAMPLING_HPP
#define MCLT_DPP_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mclt/dpp/kernel.hpp"
#include "mclt/errors.hpp"
#include "mclt/numeric/parallel.hpp"
#include "mclt/numeric/random.hpp"

namespace mclt::dpp {

/// A point configuration as grid-cell indices; a cell index repeats once per
/// point in that cell.
using Configuration = std::vector<int>;

/// One draw of the discrete determinantal measure with marginal kernel M:
/// keep eigenvector i with probability λ_i, then pick points one at a time
/// from the projection onto the kept span, conditioning by elimination.
inline Configuration sample_dpp(const DiscretizedKernel& dk, Xoshiro256pp& g) {
  if (dk.max_eigenvalue() > 1.0 + 1e-8)
    throw DomainError("sample_dpp: kernel eigenvalues must lie in [0, 1]");
  const int m = dk.size();
  std::vector<int> keep;
  for (int i = 0; i < m; ++i)
    if (g.uniform() < dk.eigenvalues(i)) keep.push_back(i);
  Eigen::MatrixXd V(m, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) V.col(c) = dk.eigenvectors.col(keep[c]);
  Configuration out;
  std::vector<double> p(m);
  while (V.cols() > 0) {
    const Eigen::Index k = V.cols();
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += (p[i] = V.row(i).squaredNorm());
    double target = g.uniform() * total;
    int pick = m - 1;
    for (int i = 0; i < m; ++i) {
      target -= p[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    while (p[pick] == 0.0 && pick > 0) --pick;
    out.push_back(pick);
    if (k == 1) break;
    Eigen::Index j = 0;
    V.row(pick).cwiseAbs().maxCoeff(&j);
    // kill coordinate `pick` in every other column, drop column j
    const Eigen::VectorXd vj = V.col(j) / V(pick, j);
    Eigen::MatrixXd W(m, k - 1);
    for (Eigen::Index c = 0, w = 0; c < k; ++c) {
      if (c == j) continue;
      W.col(w++) = V.col(c) - V(pick, c) * vj;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(m, k - 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// n independent draws; draw i uses stream (seed, i / chunk) so results do
/// not depend on the worker count.
template <class Draw>
std::vector<Configuration> sample_many(std::size_t n, std::uint64_t seed, std::size_t jobs, Draw&& draw) {
  constexpr std::size_t chunk = 4096;
  const std::size_t blocks = (n + chunk - 1) / chunk;
  std::vector<Configuration> out(n);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    Xoshiro256pp g = Xoshiro256pp::stream(seed, b);
    for (std::size_t i = b * chunk; i < std::min(n, (b + 1) * chunk); ++i) out[i] = draw(g);
  });
  return out;
}

inline std::vector<Configuration> sample_dpp(const DiscretizedKernel& dk, std::size_t n, std::uint64_t seed,
                                             std::size_t jobs = 0) {
  if (dk.max_eigenvalue() > 1.0 + 1e-8)
    throw DomainError("sample_dpp: kernel eigenvalues must lie in [0, 1]");
  return sample_many(n, seed, jobs, [&](Xoshiro256pp& g) { return sample_dpp(dk, g); });
}

/// α = 2 via the Cox representation: H = F z with M = F Fᵀ (so H_i has the
/// law of √w_i·G(x_i) for the centered Gaussian field G with covariance K),
/// then Poisson(H_i²) points in cell i.
inline std::vector<Configuration> sample_permanental_cox(const DiscretizedKernel& dk, double alpha, std::size_t n,
                                                         std::uint64_t seed, std::size_t jobs = 0) {
  if (alpha != 2.0)
    throw CapabilityError("sample_permanental_cox: only alpha = 2 (squared real Gaussian field) is supported");
  const int m = dk.size();
  const Eigen::VectorXd lam = dk.eigenvalues.cwiseMax(0.0);
  if (!lam.allFinite()) throw NumericalError("sample_permanental_cox: spectral factorization failed");
  const Eigen::MatrixXd F = dk.eigenvectors * lam.cwiseSqrt().asDiagonal();
  return sample_many(n, seed, jobs, [&](Xoshiro256pp& g) {
    std::normal_distribution<double> nd;
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z(i) = nd(g);
    const Eigen::VectorXd h = F * z;
    Configuration c;
    for (int i = 0; i < m; ++i) {
      const double mu = h(i) * h(i);
      if (mu <= 0.0) continue;
      std::poisson_distribution<int> pd(mu);
      for (int k = pd(g); k > 0; --k) c.push_back(i);
    }
    return c;
  });
}

/// α = 0: independent Poisson(M_ii) counts.
inline std::vector<Configuration> sample_poisson(const DiscretizedKernel& dk, std::size_t n, std::uint64_t seed,
                                                 std::size_t jobs = 0) {
  const int m = dk.size();
  return sample_many(n, seed, jobs, [&](Xoshiro256pp& g) {
    Configuration c;
    for (int i = 0; i < m; ++i) {
      const double mu = dk.matrix(i, i);
      if (mu <= 0.0) continue;
      std::poisson_distribution<int> pd(mu);
      for (int k = pd(g); k > 0; --k) c.push_back(i);
    }
    return c;
  });
}

struct CorrelationValidation {
  std::size_t samples = 0;
  int rho1_bins = 0;
  int rho2_bins = 0;
  double max_z_rho1 = 0.0;
  double max_z_rho2 = 0.0;
  double fraction_within = 0.0;  // bins within 3 s.e.
  bool low_sample_warning = false;
  bool pass = false;  // at least 90% of bins within 3 s.e.
};

/// Per-cell factorial moments against Det_α: E n_i = M_ii and, on a coarse
/// set of cells, E[n_i n_j] (i ≠ j) or E[n_i(n_i − 1)] against
/// M_ii M_jj + α M_ij².
inline CorrelationValidation correlation_validation(const std::vector<Configuration>& samples,
                                                    const DiscretizedKernel& dk, double alpha, int max_cells = 24) {
  if (samples.empty()) throw ArgumentError("correlation_validation: no samples");
  const int m = dk.size();
  CorrelationValidation rep;
  rep.samples = samples.size();
  rep.low_sample_warning = samples.size() < 10000;
  const double N = static_cast<double>(samples.size());

  std::vector<int> cells;
  const int stride = std::max(1, (m + max_cells - 1) / max_cells);
  for (int i = 0; i < m; i += stride) cells.push_back(i);
  const int c = static_cast<int>(cells.size());

  std::vector<double> s1(m, 0.0), q1(m, 0.0);
  std::vector<double> s2(c * c, 0.0), q2(c * c, 0.0);
  std::vector<int> counts(m, 0);
  for (const auto& conf : samples) {
    for (int i : conf) {
      if (i < 0 || i >= m) throw ArgumentError("correlation_validation: cell index out of range");
      ++counts[i];
    }
    for (int i = 0; i < m; ++i) {
      s1[i] += counts[i];
      q1[i] += static_cast<double>(counts[i]) * counts[i];
    }
    for (int a = 0; a < c; ++a)
      for (int b = a; b < c; ++b) {
        const double na = counts[cells[a]], nb = counts[cells[b]];
        const double v = a == b ? na * (na - 1.0) : na * nb;
        s2[a * c + b] += v;
        q2[a * c + b] += v * v;
      }
    for (int i : conf) counts[i] = 0;
  }
  int within = 0, bins = 0;
  auto z_of = [&](double s, double q, double expected) {
    const double mean = s / N;
    const double var = std::max(0.0, q / N - mean * mean);
    const double se = std::sqrt(var / std::max(N - 1.0, 1.0));
    const double dev = std::abs(mean - expected);
    if (se == 0.0) return dev <= 1e-12 * std::max(1.0, std::abs(expected)) ? 0.0 : std::numeric_limits<double>::infinity();
    return dev / se;
  };
  for (int i = 0; i < m; ++i) {
    const double z = z_of(s1[i], q1[i], dk.matrix(i, i));
    rep.max_z_rho1 = std::max(rep.max_z_rho1, z);
    within += z < 3.0;
    ++bins;
  }
  rep.rho1_bins = m;
  for (int a = 0; a < c; ++a)
    for (int b = a; b < c; ++b) {
      const int i = cells[a], j = cells[b];
      const double expected = dk.matrix(i, i) * dk.matrix(j, j) + alpha * dk.matrix(i, j) * dk.matrix(i, j);
      const double z = z_of(s2[a * c + b], q2[a * c + b], expected);
      rep.max_z_rho2 = std::max(rep.max_z_rho2, z);
      within += z < 3.0;
      ++bins;
      ++rep.rho2_bins;
    }
  rep.fraction_within = static_cast<double>(within) / bins;
  rep.pass = rep.fraction_within >= 0.9;
  return rep;
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_SAMPLING_HPP
