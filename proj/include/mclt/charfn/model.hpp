#ifndef MCLT_CHARFN_MODEL_HPP
#define MCLT_CHARFN_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mclt/errors.hpp"
#include "mclt/numeric/polynomial.hpp"

namespace mclt {

/// Law of a real random variable X through its moment generating function
/// u ↦ E[e^{uX}] on a disk. The function is stored in log form so that large
/// models (sums of many terms, big partition functions) do not overflow; the
/// characteristic function is Ψ(t) = evaluator(i t).
struct CharFnModel {
  std::function<cplx(cplx)> log_mgf;
  double validity_radius = std::numeric_limits<double>::infinity();
  double mean = 0.0;
  double std_dev = 1.0;
  std::string description;

  /// Lattice law, when known exactly: atoms (ascending) and probabilities.
  /// Used by exact KS computations; empty otherwise.
  std::vector<double> atoms;
  std::vector<double> probs;

  cplx log_evaluator(cplx u) const {
    if (u == cplx(0.0)) return 0.0;
    return log_mgf(u);
  }

  /// E[e^{uX}]; exactly 1 at u = 0.
  cplx evaluator(cplx u) const {
    if (u == cplx(0.0)) return 1.0;
    return std::exp(log_mgf(u));
  }

  /// Ψ(t) = E[e^{itX}].
  cplx charfn(cplx t) const { return evaluator(cplx(0.0, 1.0) * t); }
};

/// E[e^{uX}] with the validity check.
inline cplx eval_charfn(const CharFnModel& model, cplx u) {
  if (std::abs(u) > model.validity_radius)
    throw DomainError("eval_charfn: |u| = " + std::to_string(std::abs(u)) +
                      " exceeds validity radius " + std::to_string(model.validity_radius));
  return model.evaluator(u);
}

/// log cosh u without overflow for large |Re u|.
inline cplx log_cosh(cplx u) {
  if (u.real() < 0.0) u = -u;
  // cosh u = e^u (1 + e^{-2u}) / 2
  return u + std::log((1.0 + std::exp(-2.0 * u)) * 0.5);
}

namespace models {

inline CharFnModel gaussian(double mu = 0.0, double sigma = 1.0) {
  if (sigma < 0.0) throw ArgumentError("gaussian: sigma must be nonnegative");
  CharFnModel m;
  m.log_mgf = [mu, sigma](cplx u) { return mu * u + 0.5 * sigma * sigma * u * u; };
  m.mean = mu;
  m.std_dev = sigma;
  m.description = "gaussian(mu=" + std::to_string(mu) + ",sigma=" + std::to_string(sigma) + ")";
  return m;
}

/// Fair ±1 variable: E[e^{uX}] = cosh u.
inline CharFnModel rademacher() {
  CharFnModel m;
  m.log_mgf = [](cplx u) { return log_cosh(u); };
  m.mean = 0.0;
  m.std_dev = 1.0;
  m.description = "rademacher";
  m.atoms = {-1.0, 1.0};
  m.probs = {0.5, 0.5};
  return m;
}

inline CharFnModel binomial(int n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw ArgumentError("binomial: need n >= 0, p in [0,1]");
  CharFnModel m;
  m.log_mgf = [n, p](cplx u) {
    // log(1-p+p e^u), rewritten around the dominant term
    if (u.real() > 0.0) return static_cast<double>(n) * (u + std::log(p + (1.0 - p) * std::exp(-u)));
    return static_cast<double>(n) * std::log(1.0 - p + p * std::exp(u));
  };
  m.mean = n * p;
  m.std_dev = std::sqrt(n * p * (1.0 - p));
  m.description = "binomial(n=" + std::to_string(n) + ",p=" + std::to_string(p) + ")";
  m.atoms.resize(n + 1);
  m.probs.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    m.atoms[k] = k;
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double lp = (k > 0 ? k * std::log(p) : 0.0) + (n - k > 0 ? (n - k) * std::log1p(-p) : 0.0);
    m.probs[k] = std::exp(logc + lp);
  }
  return m;
}

/// N − λ with N ~ Poisson(λ).
inline CharFnModel poisson_centered(double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("poisson_centered: lambda must be positive");
  CharFnModel m;
  m.log_mgf = [lambda](cplx u) {
    // e^u − 1 − u, with a short series near 0 to avoid cancellation
    if (std::abs(u) < 1e-3) return lambda * u * u * (0.5 + u * (1.0 / 6 + u * (1.0 / 24 + u / 120.0)));
    return lambda * (std::exp(u) - 1.0 - u);
  };
  m.mean = 0.0;
  m.std_dev = std::sqrt(lambda);
  m.description = "poisson_centered(lambda=" + std::to_string(lambda) + ")";
  return m;
}

/// Sum of n independent copies of base.
inline CharFnModel iid_sum(const CharFnModel& base, int n) {
  if (n < 1) throw ArgumentError("iid_sum: n must be positive");
  CharFnModel m;
  auto f = base.log_mgf;
  m.log_mgf = [f, n](cplx u) { return static_cast<double>(n) * f(u); };
  m.validity_radius = base.validity_radius;
  m.mean = n * base.mean;
  m.std_dev = std::sqrt(static_cast<double>(n)) * base.std_dev;
  m.description = "iid_sum(" + base.description + ",n=" + std::to_string(n) + ")";
  if (!base.atoms.empty() && n * base.atoms.size() <= 4096) {
    // exact convolution of lattice laws on a common grid
    std::vector<double> a = base.atoms, p = base.probs;
    for (int k = 1; k < n; ++k) {
      std::vector<double> na, np;
      for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < base.atoms.size(); ++j) {
          na.push_back(a[i] + base.atoms[j]);
          np.push_back(p[i] * base.probs[j]);
        }
      // merge equal atoms (sums of lattice values are exact in double for
      // the small integers used here)
      std::vector<std::size_t> idx(na.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return na[x] < na[y]; });
      a.clear();
      p.clear();
      for (std::size_t i : idx) {
        if (!a.empty() && std::abs(a.back() - na[i]) <= 1e-9 * (1.0 + std::abs(na[i])))
          p.back() += np[i];
        else {
          a.push_back(na[i]);
          p.push_back(np[i]);
        }
      }
    }
    m.atoms = std::move(a);
    m.probs = std::move(p);
  }
  return m;
}

/// (X − E X)/σ.
inline CharFnModel standardized(const CharFnModel& base) {
  if (!(base.std_dev > 0.0)) throw PreconditionError("standardized: std_dev must be positive");
  CharFnModel m;
  auto f = base.log_mgf;
  const double mu = base.mean, s = base.std_dev;
  m.log_mgf = [f, mu, s](cplx u) { return f(u / s) - u * (mu / s); };
  m.validity_radius = base.validity_radius * s;
  m.mean = 0.0;
  m.std_dev = 1.0;
  m.description = "standardized(" + base.description + ")";
  m.atoms = base.atoms;
  m.probs = base.probs;
  for (double& a : m.atoms) a = (a - mu) / s;
  return m;
}

/// X − E X.
inline CharFnModel centered(const CharFnModel& base) {
  CharFnModel m = base;
  auto f = base.log_mgf;
  const double mu = base.mean;
  m.log_mgf = [f, mu](cplx u) { return f(u) - u * mu; };
  m.mean = 0.0;
  m.description = "centered(" + base.description + ")";
  for (double& a : m.atoms) a -= mu;
  return m;
}

/// a·X + b.
inline CharFnModel affine(const CharFnModel& base, double a, double b) {
  if (a == 0.0) throw ArgumentError("affine: scale must be nonzero");
  CharFnModel m;
  auto f = base.log_mgf;
  m.log_mgf = [f, a, b](cplx u) { return f(a * u) + b * u; };
  m.validity_radius = base.validity_radius / std::abs(a);
  m.mean = a * base.mean + b;
  m.std_dev = std::abs(a) * base.std_dev;
  m.description = "affine(" + base.description + ")";
  m.atoms = base.atoms;
  m.probs = base.probs;
  for (double& x : m.atoms) x = a * x + b;
  if (a < 0.0) {
    std::reverse(m.atoms.begin(), m.atoms.end());
    std::reverse(m.probs.begin(), m.probs.end());
  }
  return m;
}

/// Sum of n fair ±1 variables, with its exact lattice law (2·Bin(n,½) − n).
inline CharFnModel rademacher_sum(int n) {
  CharFnModel m = affine(binomial(n, 0.5), 2.0, -static_cast<double>(n));
  m.log_mgf = [n](cplx u) { return static_cast<double>(n) * log_cosh(u); };
  m.mean = 0.0;
  m.description = "iid_sum(rademacher,n=" + std::to_string(n) + ")";
  return m;
}

/// Point mass at c (σ = 0).
inline CharFnModel degenerate(double c = 0.0) {
  CharFnModel m;
  m.log_mgf = [c](cplx u) { return c * u; };
  m.mean = c;
  m.std_dev = 0.0;
  m.description = "degenerate(" + std::to_string(c) + ")";
  m.atoms = {c};
  m.probs = {1.0};
  return m;
}

}  // namespace models
}  // namespace mclt

#endif  // MCLT_CHARFN_MODEL_HPP
