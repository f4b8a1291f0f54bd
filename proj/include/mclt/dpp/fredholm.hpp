#ifndef MCLT_DPP_FREDHOLM_HPP
#define MCLT_DPP_FREDHOLM_HPP

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mclt/charfn/model.hpp"
#include "mclt/dpp/alpha_det.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/errors.hpp"

namespace mclt::dpp {

using cplx = std::complex<double>;

/// e^z − 1 keeping relative accuracy for small |z|.
inline cplx expm1c(cplx z) {
  if (z.imag() == 0.0) return std::expm1(z.real());
  const double s = std::sin(0.5 * z.imag());
  return {std::expm1(z.real()) * std::cos(z.imag()) - 2.0 * s * s, std::exp(z.real()) * std::sin(z.imag())};
}

/// log(1 + z) keeping relative accuracy for small |z| (Kahan's trick).
inline cplx log1pc(cplx z) {
  if (z.imag() == 0.0 && z.real() > -1.0) return std::log1p(z.real());
  const cplx w = 1.0 + z;
  if (w == cplx(1.0)) return z;
  return std::log(w) * z / (w - 1.0);
}

/// The discrete operator α·diag(g_u)·M with g_u = 1 − e^{−uφ}, prepared once
/// per (kernel, φ, α) so repeated evaluations in u are cheap.
///
/// With M = F Fᵀ (F = V Λ^{1/2} over the numerically nonzero modes), the
/// nonzero eigenvalues of diag(g)·M are those of the rank-sized symmetric
/// matrix Fᵀ diag(g) F. When φ is constant on the grid they are simply g·λ_i.
class FredholmOperator {
public:
  FredholmOperator(std::shared_ptr<const DiscretizedKernel> dk, Eigen::VectorXd phi, double alpha)
      : dk_(std::move(dk)), phi_(std::move(phi)), alpha_(alpha) {
    if (!dk_) throw ArgumentError("FredholmOperator: null kernel");
    if (phi_.size() != dk_->size()) throw ArgumentError("FredholmOperator: phi has the wrong length");
    if (alpha_ < 0.0 && dk_->max_eigenvalue() > 1.0 / std::abs(alpha_) + 1e-8)
      throw DomainError("FredholmOperator: kernel eigenvalue exceeds 1/|alpha|");
    const int m = dk_->size();
    if (m > 0 && (phi_.array() == phi_(0)).all()) constant_ = phi_(0);
    const double top = dk_->max_eigenvalue();
    std::vector<int> keep;
    for (int i = 0; i < m; ++i)
      if (dk_->eigenvalues(i) > 1e-14 * top && dk_->eigenvalues(i) > 0.0) keep.push_back(i);
    modes_.resize(static_cast<Eigen::Index>(keep.size()));
    factor_.resize(m, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      modes_(k) = dk_->eigenvalues(keep[k]);
      factor_.col(k) = dk_->eigenvectors.col(keep[k]) * std::sqrt(modes_(k));
    }
  }

  const DiscretizedKernel& kernel() const { return *dk_; }
  const Eigen::VectorXd& phi() const { return phi_; }
  double alpha() const { return alpha_; }
  int rank() const { return static_cast<int>(modes_.size()); }
  std::optional<double> constant_value() const { return constant_; }

  /// α = −1/m for a positive integer m: Det^{−1/α} is then entire in u.
  bool entire() const {
    if (alpha_ >= 0.0) return false;
    const double m = -1.0 / alpha_;
    return std::abs(m - std::round(m)) < 1e-12;
  }

  /// Nonzero eigenvalues η_i of α·diag(1 − e^{−uφ})·M.
  std::vector<cplx> eigenvalues(cplx u) const {
    std::vector<cplx> eta;
    if (alpha_ == 0.0) return eta;
    if (constant_) {
      const cplx g = -expm1c(-u * *constant_);
      for (Eigen::Index i = 0; i < modes_.size(); ++i) eta.push_back(alpha_ * g * modes_(i));
      return eta;
    }
    if (u.imag() == 0.0) {
      const Eigen::VectorXd g = (-(-u.real() * phi_.array()).unaryExpr([](double x) { return std::expm1(x); })).matrix();
      const Eigen::MatrixXd c = factor_.transpose() * g.asDiagonal() * factor_;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) eta.push_back(alpha_ * es.eigenvalues()(i));
      return eta;
    }
    const Eigen::MatrixXcd c = complex_core(u);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(c, false);
    if (es.info() != Eigen::Success) throw NumericalError("FredholmOperator: eigensolver failed");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) eta.push_back(alpha_ * es.eigenvalues()(i));
    return eta;
  }

  double spectral_radius(cplx u) const {
    double r = 0.0;
    for (cplx e : eigenvalues(u)) r = std::max(r, std::abs(e));
    return r;
  }

  /// log E[e^{−uΛ(φ)}] = −(1/α) Σ log(1 + η_i), principal logs, under
  /// spectral radius < 1 − tol. α = 0 uses Campbell: Σ M_ii (e^{−uφ_i} − 1).
  cplx log_laplace(cplx u, double tol = 1e-9) const {
    if (u == cplx(0.0)) return 0.0;
    if (alpha_ == 0.0) {
      cplx s = 0.0;
      for (int i = 0; i < phi_.size(); ++i) s += dk_->matrix(i, i) * expm1c(-u * phi_(i));
      return s;
    }
    const auto eta = eigenvalues(u);
    double rho = 0.0;
    for (cplx e : eta) rho = std::max(rho, std::abs(e));
    if (rho >= 1.0 - tol)
      throw DomainError("fredholm_log_laplace: spectral radius " + std::to_string(rho) + " of alpha*M_{phi,u}K at u = (" +
                        std::to_string(u.real()) + "," + std::to_string(u.imag()) + ") is not below 1 - tol");
    cplx s = 0.0;
    for (cplx e : eta) s += log1pc(e);
    return -s / alpha_;
  }

  /// For entire cases: −(1/α)·log Det[I + α M_{φ,u}K] on an arbitrary branch
  /// (exponentiating is branch-free since −1/α is an integer). No radius
  /// precondition; −∞ real part at zeros.
  cplx log_laplace_entire(cplx u) const {
    if (u == cplx(0.0)) return 0.0;
    if (!entire()) throw PreconditionError("log_laplace_entire: alpha is not -1/m");
    cplx s = 0.0;
    if (constant_) {
      const cplx g = -expm1c(-u * *constant_);
      for (Eigen::Index i = 0; i < modes_.size(); ++i) s += log1pc(alpha_ * g * modes_(i));
    } else {
      const Eigen::Index r = modes_.size();
      const Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(r, r) + alpha_ * complex_core(u);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
      const Eigen::MatrixXcd& lu_m = lu.matrixLU();
      for (Eigen::Index i = 0; i < r; ++i) s += std::log(lu_m(i, i));
      if (lu.permutationP().determinant() < 0) s += cplx(0.0, std::numbers::pi);
    }
    return -s / alpha_;
  }

private:
  Eigen::MatrixXcd complex_core(cplx u) const {
    Eigen::VectorXcd g(phi_.size());
    for (Eigen::Index i = 0; i < phi_.size(); ++i) g(i) = -expm1c(-u * phi_(i));
    const Eigen::MatrixXcd f = factor_.cast<cplx>();
    return f.transpose() * g.asDiagonal() * f;
  }

  std::shared_ptr<const DiscretizedKernel> dk_;
  Eigen::VectorXd phi_;
  double alpha_;
  std::optional<double> constant_;
  Eigen::VectorXd modes_;
  Eigen::MatrixXd factor_;
};

inline std::shared_ptr<const DiscretizedKernel> share(const DiscretizedKernel& dk) {
  return std::make_shared<const DiscretizedKernel>(dk);
}

inline cplx fredholm_log_laplace(const DiscretizedKernel& dk, const Eigen::VectorXd& phi, cplx u, double alpha,
                                 double tol = 1e-9) {
  // non-owning view; the operator does not outlive this call
  const FredholmOperator op(std::shared_ptr<const DiscretizedKernel>(&dk, [](const DiscretizedKernel*) {}), phi, alpha);
  return op.log_laplace(u, tol);
}

/// Charfn model of Λ(φ): log E[e^{vΛ}] = log_laplace(−v). Entire for α = −1/m;
/// otherwise valid on the disk where the radius precondition is guaranteed
/// by |g_u| ≤ e^{|u|‖φ‖∞} − 1.
inline CharFnModel fredholm_charfn_model(std::shared_ptr<const FredholmOperator> op) {
  CharFnModel m;
  const bool entire = op->entire();
  m.log_mgf = [op, entire](cplx v) { return entire ? op->log_laplace_entire(-v) : op->log_laplace(-v); };
  if (!entire && op->alpha() != 0.0) {
    const double sup = op->phi().cwiseAbs().maxCoeff();
    const double lam = op->kernel().max_eigenvalue();
    if (sup > 0.0 && lam > 0.0)
      m.validity_radius = 0.999 * std::log1p((1.0 - 1e-6) / (std::abs(op->alpha()) * lam)) / sup;
  }
  m.description = "linear statistic of an alpha-determinantal process (alpha=" + std::to_string(op->alpha()) + ")";
  return m;
}

/// Var Λ(φ) = Σ φ_i² M_ii + α Σ_ij φ_i φ_j M_ij².
inline double linstat_variance_formula(const DiscretizedKernel& dk, const Eigen::VectorXd& phi, double alpha) {
  if (phi.size() != dk.size()) throw ArgumentError("linstat_variance_formula: phi has the wrong length");
  const double first = (phi.array().square() * dk.matrix.diagonal().array()).sum();
  if (alpha == 0.0) return first;
  const double second = phi.dot(dk.matrix.array().square().matrix() * phi);
  return first + alpha * second;
}

struct SeriesCheck {
  cplx series;
  cplx eigen;
  double abs_diff = 0.0;
  double norm = 0.0;        // ‖αJ‖₂
  double tail_bound = 0.0;  // bound on the omitted terms n > k_max
  int k_max = 0;
};

namespace detail {

/// Σ_{n>k} b_n for B(z) = Π (1 − z s_i)^{−p}, 0 ≤ s_i < 1: the series of
/// Det[I − zαJ]^{−1/α} is dominated termwise by B with s_i = |ν_i|, p = 1/|α|.
inline double majorant_tail(const std::vector<double>& s, double p, int k) {
  std::vector<double> a(k + 1, 0.0), b(k + 1, 0.0);
  double log_total = 0.0;
  for (double v : s) log_total -= p * std::log1p(-v);
  for (int n = 1; n <= k; ++n) {
    double pw = 0.0;
    for (double v : s) pw += std::pow(v, n);
    a[n] = p * pw / n;
  }
  b[0] = 1.0;
  double head = 1.0;
  for (int n = 1; n <= k; ++n) {
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += j * a[j] * b[n - j];
    b[n] = acc / n;
    head += b[n];
  }
  return std::max(0.0, std::exp(log_total) - head);
}

/// Same for α = −1/p, p integer: Det^p is a polynomial in z dominated by
/// Π (1 + z s_i)^p, so the tail vanishes once k exceeds its degree.
inline double polynomial_majorant_tail(const std::vector<double>& s, int p, int k) {
  std::vector<double> c{1.0};
  for (double v : s)
    for (int rep = 0; rep < p; ++rep) {
      c.push_back(0.0);
      for (std::size_t n = c.size() - 1; n > 0; --n) c[n] += v * c[n - 1];
    }
  double tail = 0.0;
  for (std::size_t n = static_cast<std::size_t>(k) + 1; n < c.size(); ++n) tail += c[n];
  return tail;
}

}  // namespace detail

/// Truncated expansion Σ_{n≤k_max} (1/n!) Σ_{i_1..i_n} Det_α[J(x_{i_a},x_{i_b})]
/// with J = −diag(g_u)·M on the grid, summed over multisets of nodes with
/// weight 1/Π(multiplicity!), against Det[I − αJ]^{−1/α} from eigenvalues.
inline SeriesCheck fredholm_series_check(const DiscretizedKernel& dk, const Eigen::VectorXd& phi, cplx u, double alpha,
                                         int k_max) {
  if (k_max < 0 || k_max > 6) throw ArgumentError("fredholm_series_check: k_max must be in [0, 6]");
  if (phi.size() != dk.size()) throw ArgumentError("fredholm_series_check: phi has the wrong length");
  const int m = dk.size();
  Eigen::MatrixXcd J(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) J(i, j) = expm1c(-u * phi(i)) * dk.matrix(i, j);
  SeriesCheck out;
  out.k_max = k_max;
  const Eigen::MatrixXcd aj = alpha * J;
  out.norm = m ? Eigen::JacobiSVD<Eigen::MatrixXcd>(aj).singularValues()(0) : 0.0;
  if (out.norm >= 1.0)
    throw DomainError("fredholm_series_check: ||alpha J|| = " + std::to_string(out.norm) + " is not below 1");

  cplx total = 0.0;
  std::vector<int> idx;
  std::vector<double> inv_fact{1.0};
  for (int n = 1; n <= k_max; ++n) inv_fact.push_back(inv_fact.back() / n);
  // depth-first over nondecreasing index tuples
  auto visit = [&](auto&& self, int start, int depth) -> void {
    if (depth > 0) {
      Eigen::MatrixXcd sub(depth, depth);
      for (int a = 0; a < depth; ++a)
        for (int b = 0; b < depth; ++b) sub(a, b) = J(idx[a], idx[b]);
      double weight = 1.0;
      int run = 1;
      for (int a = 1; a < depth; ++a) {
        if (idx[a] == idx[a - 1]) {
          ++run;
        } else {
          weight *= inv_fact[run];
          run = 1;
        }
      }
      weight *= inv_fact[run];
      total += weight * alpha_det(sub, alpha);
    }
    if (depth == k_max) return;
    for (int i = start; i < m; ++i) {
      idx.push_back(i);
      self(self, i, depth + 1);
      idx.pop_back();
    }
  };
  total = 1.0;
  visit(visit, 0, 0);
  out.series = total;
  out.eigen = std::exp(fredholm_log_laplace(dk, phi, u, alpha));
  out.abs_diff = std::abs(out.series - out.eigen);

  if (alpha == 0.0) {
    // Det_0 is the diagonal product: the series is exp(tr J)
    const double t = std::abs(J.trace());
    double head = 0.0, term = 1.0;
    for (int n = 0; n <= k_max; ++n) {
      head += term;
      term *= t / (n + 1);
    }
    out.tail_bound = std::max(0.0, std::exp(t) - head);
  } else if (m > 0) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(aj, false);
    std::vector<double> s;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s.push_back(std::abs(es.eigenvalues()(i)));
    const double p = 1.0 / std::abs(alpha);
    if (alpha < 0.0 && std::abs(p - std::round(p)) < 1e-12)
      out.tail_bound = detail::polynomial_majorant_tail(s, static_cast<int>(std::round(p)), k_max);
    else
      out.tail_bound = detail::majorant_tail(s, p, k_max);
  }
  return out;
}

struct CumulantReport {
  double L = 1.0;
  double mean = 0.0;
  double variance = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  double step = 0.0;
  double skewness = 0.0;         // κ₃/σ³
  double excess_kurtosis = 0.0;  // κ₄/σ⁴
  int halvings = 0;
};

/// Cumulants κ_j = (−1)^j F^{(j)}(0) of F(u) = log E[e^{−uΛ}], from central
/// differences at h, h/2, h/4 with two Richardson levels. The step starts at
/// 1e−2/σ (σ from the variance formula) and is halved while the last two
/// Richardson estimates disagree by more than 1e−4 relative.
inline CumulantReport linstat_cumulants(const FredholmOperator& op, double step = 0.0, double L = 1.0) {
  const double var_est = std::max(0.0, linstat_variance_formula(op.kernel(), op.phi(), op.alpha()));
  const double sigma = std::sqrt(var_est);
  double h = step > 0.0 ? step : 1e-2 / std::max(sigma, 1.0);
  auto F = [&](double u) { return op.log_laplace(cplx(u, 0.0)).real(); };

  CumulantReport rep;
  rep.L = L;
  for (int attempt = 0; attempt < 8; ++attempt, h *= 0.5) {
    // samples at 0, ±h/4, ±h/2, ±h, ±2h
    const double q = h / 4.0;
    std::vector<double> fp(9), fm(9);
    const double f0 = F(0.0);
    for (int k : {1, 2, 4, 8}) {
      fp[k] = F(k * q);
      fm[k] = F(-k * q);
    }
    // stencil at spacing s = k·q (k = 1, 2, 4), using points ±s, ±2s
    auto d = [&](int order, int k) {
      const double s = k * q;
      switch (order) {
        case 1: return (fp[k] - fm[k]) / (2.0 * s);
        case 2: return (fp[k] - 2.0 * f0 + fm[k]) / (s * s);
        case 3: return (fp[2 * k] - 2.0 * fp[k] + 2.0 * fm[k] - fm[2 * k]) / (2.0 * s * s * s);
        default: return (fp[2 * k] - 4.0 * fp[k] + 6.0 * f0 - 4.0 * fm[k] + fm[2 * k]) / (s * s * s * s);
      }
    };
    double est[5];
    bool ok = true;
    for (int order = 1; order <= 4; ++order) {
      const double r1a = (4.0 * d(order, 2) - d(order, 4)) / 3.0;
      const double r1b = (4.0 * d(order, 1) - d(order, 2)) / 3.0;
      const double r2 = (16.0 * r1b - r1a) / 15.0;
      est[order] = r2;
      const double scale = std::max({std::abs(r2), std::pow(sigma, order), 1e-12});
      if (std::abs(r2 - r1b) > 1e-4 * scale) ok = false;
    }
    if (!ok) {
      ++rep.halvings;
      continue;
    }
    rep.step = h;
    rep.mean = -est[1];
    rep.variance = est[2];
    rep.kappa3 = -est[3];
    rep.kappa4 = est[4];
    if (rep.variance > 0.0) {
      rep.skewness = rep.kappa3 / std::pow(rep.variance, 1.5);
      rep.excess_kurtosis = rep.kappa4 / (rep.variance * rep.variance);
    }
    return rep;
  }
  throw NumericalError("linstat_cumulants: Richardson estimates did not settle after step halving", h);
}

inline CumulantReport linstat_cumulants(const DiscretizedKernel& dk, const Eigen::VectorXd& phi, double alpha,
                                        double step = 0.0, double L = 1.0) {
  const FredholmOperator op(std::shared_ptr<const DiscretizedKernel>(&dk, [](const DiscretizedKernel*) {}), phi, alpha);
  return linstat_cumulants(op, step, L);
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_FREDHOLM_HPP
