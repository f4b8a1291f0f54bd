#ifndef MCLT_SPIN_EXACT_HPP
#define MCLT_SPIN_EXACT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mclt/charfn/model.hpp"
#include "mclt/errors.hpp"
#include "mclt/numeric/polynomial.hpp"
#include "mclt/numeric/quadrature.hpp"
#include "mclt/spin/model.hpp"

namespace mclt::spin {

struct QuadratureOptions {
  int circle_nodes = 64;
  int sphere_theta = 32;  // Gauss–Legendre nodes in σ¹ = cos θ
  int sphere_phi = 64;    // trapezoid nodes in the azimuth
  double tol = 1e-10;     // relative agreement required with the half-order rule
  bool check_convergence = true;
};

/// Discretized single-site measure: nodes in ℝ^N with weights summing to μ₀'s
/// total mass. On S² the polar axis is the first component, so the field
/// direction e₁ is integrated by the Gauss–Legendre rule.
struct SiteNodes {
  std::vector<Components> coords;
  std::vector<double> weights;
  int size() const { return static_cast<int>(coords.size()); }
};

inline SiteNodes site_nodes(const SpinMeasure& mu, const QuadratureOptions& q, int divisor = 1) {
  SiteNodes s;
  switch (mu.kind) {
    case MeasureKind::Ising:
    case MeasureKind::Atomic:
      for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
        s.coords.push_back({mu.atoms[k], 0.0, 0.0});
        s.weights.push_back(mu.weights[k]);
      }
      break;
    case MeasureKind::Circle: {
      const int Q = std::max(4, q.circle_nodes / divisor);
      for (int k = 0; k < Q; ++k) {
        const double th = 2.0 * std::numbers::pi * k / Q;
        s.coords.push_back({std::cos(th), std::sin(th), 0.0});
        s.weights.push_back(2.0 * std::numbers::pi / Q);
      }
      break;
    }
    case MeasureKind::Sphere: {
      const int Qt = std::max(2, q.sphere_theta / divisor), Qp = std::max(4, q.sphere_phi / divisor);
      const auto gl = gauss_legendre(Qt);
      for (int j = 0; j < Qt; ++j) {
        const double x = gl.nodes[j], s_perp = std::sqrt(std::max(0.0, 1.0 - x * x));
        for (int k = 0; k < Qp; ++k) {
          const double ph = 2.0 * std::numbers::pi * k / Qp;
          s.coords.push_back({x, s_perp * std::cos(ph), s_perp * std::sin(ph)});
          s.weights.push_back(gl.weights[j] * 2.0 * std::numbers::pi / Qp);
        }
      }
      break;
    }
  }
  return s;
}

namespace detail {

inline double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Sum-product elimination on the lattice graph with dense pairwise factors.
/// Works whenever vertices can be removed in an order where each has at most
/// two remaining neighbours (chains of any length, cycles, the 2×2 square).
inline cplx eliminate(const SpinModel& m, const SiteNodes& nodes) {
  const int n = m.sites(), Q = nodes.size(), N = m.components();
  std::vector<Eigen::VectorXcd> unary(n, Eigen::VectorXcd(Q));
  for (int x = 0; x < n; ++x)
    for (int a = 0; a < Q; ++a) {
      cplx e = 0.0;
      for (int i = 0; i < N; ++i) e += m.field[x][i] * nodes.coords[a][i];
      unary[x](a) = nodes.weights[a] * std::exp(m.beta * e);
    }
  std::map<std::pair<int, int>, Eigen::MatrixXcd> pairs;  // key (lo, hi), rows index lo
  for (std::size_t e = 0; e < m.lattice.edges.size(); ++e) {
    auto [a, b] = m.lattice.edges[e];
    if (a > b) std::swap(a, b);
    Eigen::MatrixXcd M(Q, Q);
    for (int p = 0; p < Q; ++p)
      for (int r = 0; r < Q; ++r) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += m.couplings[e][i] * nodes.coords[p][i] * nodes.coords[r][i];
        M(p, r) = std::exp(m.beta * s);
      }
    auto it = pairs.find({a, b});
    if (it == pairs.end()) pairs.emplace(std::make_pair(a, b), std::move(M));
    else it->second = it->second.cwiseProduct(M);
  }

  cplx log_acc = 0.0;
  auto normalize_vec = [&](Eigen::VectorXcd& v) {
    const double s = v.cwiseAbs().maxCoeff();
    if (s > 0.0 && std::isfinite(s)) {
      v /= s;
      log_acc += std::log(s);
    }
  };
  auto normalize_mat = [&](Eigen::MatrixXcd& M) {
    const double s = max_abs(M);
    if (s > 0.0 && std::isfinite(s)) {
      M /= s;
      log_acc += std::log(s);
    }
  };
  // factor between x and y, oriented with rows indexing x
  auto oriented = [&](int x, int y) -> Eigen::MatrixXcd {
    const auto& M = pairs.at({std::min(x, y), std::max(x, y)});
    return x < y ? M : M.transpose();
  };

  std::vector<bool> alive(n, true);
  for (int step = 0; step < n; ++step) {
    std::vector<std::vector<int>> nbrs(n);
    for (const auto& [key, M] : pairs) {
      nbrs[key.first].push_back(key.second);
      nbrs[key.second].push_back(key.first);
    }
    int x = -1;
    for (int v = 0; v < n; ++v)
      if (alive[v] && (x < 0 || nbrs[v].size() < nbrs[x].size())) x = v;
    const auto& nb = nbrs[x];
    if (nb.size() > 2)
      throw CapabilityError("partition_function: lattice too connected for pairwise elimination");
    if (nb.empty()) {
      log_acc += std::log(unary[x].sum());
    } else if (nb.size() == 1) {
      const int y = nb[0];
      const Eigen::MatrixXcd M = oriented(x, y);
      unary[y] = unary[y].cwiseProduct(M.transpose() * unary[x]);
      normalize_vec(unary[y]);
      pairs.erase({std::min(x, y), std::max(x, y)});
    } else {
      int y = nb[0], z = nb[1];
      if (y > z) std::swap(y, z);
      const Eigen::MatrixXcd Mxy = oriented(x, y), Mxz = oriented(x, z);
      Eigen::MatrixXcd Nyz = Mxy.transpose() * unary[x].asDiagonal() * Mxz;
      pairs.erase({std::min(x, y), std::max(x, y)});
      pairs.erase({std::min(x, z), std::max(x, z)});
      auto it = pairs.find({y, z});
      if (it == pairs.end()) it = pairs.emplace(std::make_pair(y, z), std::move(Nyz)).first;
      else it->second = it->second.cwiseProduct(Nyz);
      normalize_mat(it->second);
    }
    alive[x] = false;
  }
  return log_acc;
}

/// Visits every configuration of a discrete model: fn(site_atom_indices, S¹, H).
template <class Fn>
void enumerate_states(const SpinModel& m, Fn&& fn) {
  const int n = m.sites();
  const int K = static_cast<int>(m.measure.atoms.size());
  const double states = std::pow(static_cast<double>(K), n);
  if (states > static_cast<double>(1u << 22))
    throw CapabilityError("enumeration: " + std::to_string(K) + "^" + std::to_string(n) +
                          " states exceeds the 2^22 limit");
  std::vector<int> idx(n, 0);
  std::vector<double> cfg(n, m.measure.atoms[0]);
  const auto total = static_cast<long>(states);
  for (long s = 0; s < total; ++s) {
    cplx H = 0.0;
    double S = 0.0;
    for (std::size_t e = 0; e < m.lattice.edges.size(); ++e) {
      const auto [a, b] = m.lattice.edges[e];
      H -= m.couplings[e][0] * cfg[a] * cfg[b];
    }
    double logw = 0.0;
    for (int x = 0; x < n; ++x) {
      H -= m.field[x][0] * cfg[x];
      S += cfg[x];
      logw += std::log(m.measure.weights[idx[x]]);
    }
    fn(idx, S, H, logw);
    for (int x = 0; x < n; ++x) {
      if (++idx[x] < K) {
        cfg[x] = m.measure.atoms[idx[x]];
        break;
      }
      idx[x] = 0;
      cfg[x] = m.measure.atoms[0];
    }
  }
}

/// Streaming complex log-sum-exp.
struct LogSumExp {
  double shift = -std::numeric_limits<double>::infinity();
  cplx acc = 0.0;
  void add(cplx l) {
    if (l.real() == -std::numeric_limits<double>::infinity()) return;
    if (l.real() > shift) {
      acc *= std::exp(shift - l.real());
      shift = l.real();
    }
    acc += std::exp(l - shift);
  }
  cplx value() const { return std::log(acc) + shift; }
};

inline cplx log_z_enumerate(const SpinModel& m) {
  LogSumExp lse;
  enumerate_states(m, [&](const std::vector<int>&, double, cplx H, double logw) { lse.add(-m.beta * H + logw); });
  return lse.value();
}

inline cplx log_z_backend(const SpinModel& m, const QuadratureOptions& q, int divisor) {
  if (m.lattice.max_degree() <= 2 || m.sites() <= 2) {
    try {
      return eliminate(m, site_nodes(m.measure, q, divisor));
    } catch (const CapabilityError&) {
      if (!m.measure.is_discrete()) throw;
    }
  }
  if (!m.measure.is_discrete())
    throw CapabilityError("partition_function: continuous spins need a chain, a cycle or at most 4 sites");
  return log_z_enumerate(m);
}

}  // namespace detail

/// log Z_{β,Λ}(h) for real or complex fields (principal branch of the final
/// logarithm; only exp of differences is meaningful).
inline cplx log_partition_function(const SpinModel& m, const QuadratureOptions& q = {}) {
  if (!m.measure.is_discrete() && m.sites() > 4 && m.lattice.max_degree() > 2)
    throw CapabilityError("partition_function: continuous spins need |Λ| ≤ 4 or a chain");
  const cplx lz = detail::log_z_backend(m, q, 1);
  if (!m.measure.is_discrete() && q.check_convergence) {
    const cplx lz_half = detail::log_z_backend(m, q, 2);
    const double rel = std::abs(std::exp(lz_half - lz) - 1.0);
    if (!(rel <= q.tol)) throw NumericalError("partition_function: quadrature not converged", rel);
  }
  return lz;
}

inline cplx partition_function(const SpinModel& m, const QuadratureOptions& q = {}) {
  return std::exp(log_partition_function(m, q));
}

/// Copy of the model with field h + w·e₁ on every site.
inline SpinModel shifted_field(const SpinModel& m, cplx w) {
  SpinModel s = m;
  for (auto& h : s.field) h[0] += w;
  return s;
}

/// Ψ_{S_Λ}(u) = Z(h + iu/β e₁) / Z(h).
inline cplx total_spin_charfn(const SpinModel& m, cplx u, const QuadratureOptions& q = {}) {
  const cplx lz0 = log_partition_function(m, q);
  // |Z(h)| against Σ|weights| = Z(Re h) detects a vanishing denominator
  if (!m.real_field()) {
    SpinModel re = m;
    for (auto& h : re.field)
      for (auto& c : h) c = c.real();
    const double scale = log_partition_function(re, q).real();
    if (!(lz0.real() - scale > std::log(1e-12)))
      throw DegenerateError("total_spin_charfn: partition function vanishes at the base field");
  }
  if (!std::isfinite(lz0.real())) throw DegenerateError("total_spin_charfn: partition function vanishes");
  const cplx lz = log_partition_function(shifted_field(m, cplx(0.0, 1.0) * u / m.beta), q);
  return std::exp(lz - lz0);
}

/// Exact law of S_Λ = Σ_x σ_x¹ for discrete spins and real fields:
/// sorted support values with probabilities.
struct SpinLaw {
  std::vector<double> values;
  std::vector<double> log_probs;
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

inline SpinLaw finalize_law(std::map<long long, std::pair<double, LogSumExp>>& buckets) {
  SpinLaw law;
  LogSumExp total;
  for (auto& [key, b] : buckets) total.add(b.second.value());
  const double lt = total.value().real();
  for (auto& [key, b] : buckets) {
    law.values.push_back(b.first);
    law.log_probs.push_back(b.second.value().real() - lt);
  }
  for (std::size_t k = 0; k < law.values.size(); ++k) law.mean += std::exp(law.log_probs[k]) * law.values[k];
  for (std::size_t k = 0; k < law.values.size(); ++k)
    law.variance += std::exp(law.log_probs[k]) * (law.values[k] - law.mean) * (law.values[k] - law.mean);
  return law;
}

inline long long law_key(double s) { return std::llround(s * 1e8); }

}  // namespace detail

inline SpinLaw total_spin_law(const SpinModel& m) {
  if (!m.measure.is_discrete()) throw CapabilityError("total_spin_law: needs a discrete spin measure");
  if (!m.real_field()) throw ArgumentError("total_spin_law: field must be real");
  std::map<long long, std::pair<double, detail::LogSumExp>> buckets;
  const bool chain = m.lattice.dim == 1 && !m.lattice.periodic;
  if (!chain) {
    detail::enumerate_states(m, [&](const std::vector<int>&, double S, cplx H, double logw) {
      auto& b = buckets[detail::law_key(S)];
      b.first = S;
      b.second.add(-m.beta * H.real() + logw);
    });
    return detail::finalize_law(buckets);
  }
  // free chain: dynamic programme over (last atom, partial sum)
  const auto& atoms = m.measure.atoms;
  const int K = static_cast<int>(atoms.size());
  using Layer = std::vector<std::map<long long, std::pair<double, double>>>;  // (S, log weight)
  auto add = [](std::map<long long, std::pair<double, double>>& mp, double S, double lw) {
    auto [it, fresh] = mp.try_emplace(detail::law_key(S), S, lw);
    if (!fresh) {
      const double a = std::max(it->second.second, lw), b = std::min(it->second.second, lw);
      it->second.second = a + std::log1p(std::exp(b - a));
    }
  };
  Layer cur(K);
  for (int k = 0; k < K; ++k)
    add(cur[k], atoms[k], std::log(m.measure.weights[k]) + m.beta * m.field[0][0].real() * atoms[k]);
  for (int x = 1; x < m.sites(); ++x) {
    const double J = m.couplings[x - 1][0];
    Layer next(K);
    for (int p = 0; p < K; ++p)
      for (const auto& [key, sw] : cur[p])
        for (int k = 0; k < K; ++k)
          add(next[k], sw.first + atoms[k],
              sw.second + std::log(m.measure.weights[k]) +
                  m.beta * (J * atoms[p] * atoms[k] + m.field[x][0].real() * atoms[k]));
    cur = std::move(next);
  }
  for (int k = 0; k < K; ++k)
    for (const auto& [key, sw] : cur[k]) {
      auto& b = buckets[key];
      b.first = sw.first;
      b.second.add(sw.second);
    }
  return detail::finalize_law(buckets);
}

/// E[e^{iuS_Λ}] computed directly under the Gibbs measure at the model's
/// (real) field: exact law for discrete spins, brute-force tensor-grid
/// quadrature over all sites for continuous spins.
inline cplx gibbs_charfn_direct(const SpinModel& m, double u, const QuadratureOptions& q = {}) {
  if (!m.real_field()) throw ArgumentError("gibbs_charfn_direct: field must be real");
  if (m.measure.is_discrete()) {
    const SpinLaw law = total_spin_law(m);
    cplx s = 0.0;
    for (std::size_t k = 0; k < law.values.size(); ++k)
      s += std::exp(law.log_probs[k]) * std::exp(cplx(0.0, u * law.values[k]));
    return s;
  }
  const SiteNodes nodes = site_nodes(m.measure, q);
  const int n = m.sites(), Q = nodes.size(), N = m.components();
  if (std::pow(static_cast<double>(Q), n) > 4e8)
    throw CapabilityError("gibbs_charfn_direct: tensor grid too large");
  std::vector<int> idx(n, 0);
  double shift = -std::numeric_limits<double>::infinity();
  cplx num = 0.0;
  double den = 0.0;
  const long total = std::lround(std::pow(static_cast<double>(Q), n));
  for (long s = 0; s < total; ++s) {
    double H = 0.0, S = 0.0, lw = 0.0;
    for (std::size_t e = 0; e < m.lattice.edges.size(); ++e) {
      const auto [a, b] = m.lattice.edges[e];
      for (int i = 0; i < N; ++i) H -= m.couplings[e][i] * nodes.coords[idx[a]][i] * nodes.coords[idx[b]][i];
    }
    for (int x = 0; x < n; ++x) {
      for (int i = 0; i < N; ++i) H -= m.field[x][i].real() * nodes.coords[idx[x]][i];
      S += nodes.coords[idx[x]][0];
      lw += std::log(nodes.weights[idx[x]]);
    }
    const double l = -m.beta * H + lw;
    if (l > shift) {
      const double f = std::exp(shift - l);
      num *= f;
      den *= f;
      shift = l;
    }
    const double w = std::exp(l - shift);
    num += w * std::exp(cplx(0.0, u * S));
    den += w;
    for (int x = 0; x < n; ++x) {
      if (++idx[x] < Q) break;
      idx[x] = 0;
    }
  }
  return num / den;
}

namespace detail {

/// log Z of a free chain with uniform coupling and uniform e₁ field w for
/// discrete spins, from the transfer matrix M = E·diag(weights):
/// Z = wᵀ M^{n−1} 1 = Σ_k (wᵀV)_k λ_k^{n−1} (V⁻¹1)_k. The eigen form keeps
/// relative accuracy where the sum over the law would cancel catastrophically.
/// Returns nullopt when the eigenvectors are too ill-conditioned.
inline std::optional<cplx> chain_log_z(const SpinMeasure& mu, double beta, double J, cplx w, int n) {
  const int K = static_cast<int>(mu.atoms.size());
  Eigen::VectorXcd wt(K);
  Eigen::MatrixXcd M(K, K);
  for (int k = 0; k < K; ++k) wt(k) = mu.weights[k] * std::exp(beta * w * mu.atoms[k]);
  for (int j = 0; j < K; ++j)
    for (int k = 0; k < K; ++k) M(j, k) = std::exp(beta * J * mu.atoms[j] * mu.atoms[k]) * wt(k);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXcd& V = es.eigenvectors();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
  const Eigen::VectorXcd right = lu.solve(Eigen::VectorXcd::Ones(K));
  const Eigen::RowVectorXcd left = wt.transpose() * V;
  const double cond = V.norm() * lu.inverse().norm();
  if (!(cond < 1e8)) return std::nullopt;
  LogSumExp lse;
  for (int k = 0; k < K; ++k) {
    const cplx c = left(k) * right(k);
    if (c == cplx(0.0)) continue;
    lse.add(std::log(c) + static_cast<double>(n - 1) * std::log(es.eigenvalues()(k)));
  }
  return lse.value();
}

inline bool uniform_chain(const SpinModel& m) {
  if (!m.measure.is_discrete() || m.lattice.dim != 1 || m.lattice.periodic || !m.uniform_real_e1_field())
    return false;
  for (const auto& c : m.couplings)
    if (c[0] != m.couplings[0][0]) return false;
  return true;
}

}  // namespace detail

/// CharFnModel of S_Λ: the exact law for discrete spins, the partition
/// function ratio Z(h + u/β e₁)/Z(h) for continuous spins.
inline CharFnModel spin_total_model(const SpinModel& m, const QuadratureOptions& q = {}) {
  CharFnModel cm;
  cm.description = "spin_total(" + m.measure.name() + ",d=" + std::to_string(m.lattice.dim) +
                   ",side=" + std::to_string(m.lattice.side) + ",beta=" + std::to_string(m.beta) + ")";
  if (m.measure.is_discrete()) {
    const SpinLaw law = total_spin_law(m);
    auto from_law = [law](cplx u) {
      detail::LogSumExp lse;
      for (std::size_t k = 0; k < law.values.size(); ++k) lse.add(law.log_probs[k] + u * law.values[k]);
      return lse.value();
    };
    cm.log_mgf = from_law;
    if (detail::uniform_chain(m) && m.sites() > 1) {
      const double J = m.couplings.empty() ? 0.0 : m.couplings[0][0];
      const double h = m.field[0][0].real();
      const auto z0 = detail::chain_log_z(m.measure, m.beta, J, h, m.sites());
      if (z0)
        cm.log_mgf = [mu = m.measure, beta = m.beta, J, h, n = m.sites(), lz0 = *z0, from_law](cplx u) {
          const auto lz = detail::chain_log_z(mu, beta, J, h + u / beta, n);
          return lz ? *lz - lz0 : from_law(u);
        };
    }
    cm.mean = law.mean;
    cm.std_dev = std::sqrt(law.variance);
    cm.atoms = law.values;
    for (double lp : law.log_probs) cm.probs.push_back(std::exp(lp));
    return cm;
  }
  const cplx lz0 = log_partition_function(m, q);
  cm.log_mgf = [m, q, lz0](cplx u) { return log_partition_function(shifted_field(m, u / m.beta), q) - lz0; };
  // moments from central differences of log Z along the real field direction
  const double h = 1e-3;
  const double fp = (cm.log_mgf(h) - cm.log_mgf(-h)).real() / (2 * h);
  const double fpp = (cm.log_mgf(h) + cm.log_mgf(-h)).real() / (h * h);
  cm.mean = fp;
  cm.std_dev = std::sqrt(std::max(0.0, fpp));
  return cm;
}

struct LeeYangReport {
  std::vector<cplx> fugacity_zeros;
  double max_abs_deviation_from_unit_circle = 0.0;
  double zero_free_field_radius = 0.0;
};

/// Zeros of Z as a polynomial in the fugacity z = e^{2βh} (Ising spins,
/// uniform field along e₁) and the induced zero-free radius of Ψ_{S_Λ}.
inline LeeYangReport lee_yang_zeros(const SpinModel& m) {
  if (m.measure.kind != MeasureKind::Ising)
    throw CapabilityError("lee_yang_zeros: needs Ising (±1) spins");
  if (!m.uniform_real_e1_field()) throw ArgumentError("lee_yang_zeros: field must be uniform, real and along e1");
  const int n = m.sites();
  if (n > 22) throw CapabilityError("lee_yang_zeros: at most 22 sites");
  // log c_k = log Σ_{k up spins} e^{β Σ J σσ}
  std::vector<detail::LogSumExp> lc(n + 1);
  SpinModel zero_field = m;
  for (auto& h : zero_field.field) h = {0.0, 0.0, 0.0};
  detail::enumerate_states(zero_field, [&](const std::vector<int>& idx, double, cplx H, double) {
    int up = 0;
    for (int v : idx) up += v;  // atom index 1 is +1
    lc[up].add(-m.beta * H);
  });
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> logc(n + 1);
  for (int k = 0; k <= n; ++k) top = std::max(top, logc[k] = lc[k].value().real());
  std::vector<cplx> coeffs(n + 1);
  for (int k = 0; k <= n; ++k) coeffs[k] = std::exp(logc[k] - top);

  LeeYangReport rep;
  rep.fugacity_zeros = poly_roots(coeffs);
  for (const cplx& z : rep.fugacity_zeros)
    rep.max_abs_deviation_from_unit_circle =
        std::max(rep.max_abs_deviation_from_unit_circle, std::abs(std::abs(z) - 1.0));
  // Z(h + iu/β) ∝ Π (z e^{2iu} − z_k): zeros at 2iu = Log z_k + 2πim − 2βh
  const double bh2 = 2.0 * m.beta * m.field[0][0].real();
  double best = std::numeric_limits<double>::infinity();
  for (const cplx& z : rep.fugacity_zeros)
    for (int k = -2; k <= 2; ++k) {
      const cplx u = (std::log(z) + cplx(0.0, 2.0 * std::numbers::pi * k) - bh2) / cplx(0.0, 2.0);
      best = std::min(best, std::abs(u));
    }
  rep.zero_free_field_radius = best;
  return rep;
}

}  // namespace mclt::spin

#endif  // MCLT_SPIN_EXACT_HPP
