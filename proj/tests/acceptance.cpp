// Acceptance run: one PASS/FAIL line per criterion. Each check computes its
// reference values here, independently of the library paths under test.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mclt/dpp/alpha_det.hpp"
#include "mclt/dpp/decay.hpp"
#include "mclt/dpp/fredholm.hpp"
#include "mclt/dpp/kernel.hpp"
#include "mclt/harness/run.hpp"
#include "mclt/spin/exact.hpp"

using namespace mclt;
using std::numbers::pi;
using cd = std::complex<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char b[512];
  std::snprintf(b, sizeof b, f, a...);
  return b;
}

/// Ordinary least squares slope of log y on log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

bool gate_passed(const harness::RunReport& rep, const std::string& name) {
  for (const auto& g : rep.gates)
    if (g.name == name) return g.pass;
  return false;
}

bool rows_ok(const harness::RunReport& rep, std::string& why) {
  for (const auto& r : rep.rows)
    if (!r.error.empty()) {
      why = "row " + harness::format_number(r.values[0]) + ": " + r.error;
      return false;
    }
  return true;
}

// ---- 1 ---------------------------------------------------------------------

double ryser(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  double total = 0.0;
  for (unsigned s = 1; s < (1u << n); ++s) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j)
        if (s & (1u << j)) row += a(i, j);
      prod *= row;
    }
    total += ((n - std::popcount(s)) % 2 ? -1.0 : 1.0) * prod;
  }
  return total;
}

Outcome alpha_det_oracles() {
  std::mt19937_64 g(11);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 7;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = nd(g);
    const double det = a.determinant(), per = ryser(a);
    const double d1 = dpp::alpha_det(a, -1.0), p1 = dpp::alpha_det(a, 1.0);
    worst = std::max(worst, std::abs(d1 - det) / std::max(std::abs(det), 1e-300));
    worst = std::max(worst, std::abs(p1 - per) / std::max(std::abs(per), 1e-300));
  }
  double ones = 0.0;
  const Eigen::MatrixXd J = Eigen::MatrixXd::Ones(3, 3);
  for (double al : {-1.0, 0.0, 1.0, 2.0}) {
    const double want = 1 + 3 * al + 2 * al * al;
    ones = std::max(ones, std::abs(dpp::alpha_det(J, al) - want));
  }
  return {worst < 1e-9 && ones == 0.0,
          fmt("max rel err vs det/Ryser %.2e over 50 matrices; all-ones 3x3 err %.1e", worst, ones)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome fredholm_identity() {
  std::mt19937_64 g(2);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::vector<double> alphas{-1.0, -0.5, 0.5, 1.0, 2.0};
  int accepted = 0, attempts = 0;
  double worst = 0.0, worst_det = 0.0;
  while (accepted < 20 && attempts < 5000) {
    const double alpha = alphas[attempts % alphas.size()];
    const int m = 2 + attempts % 3;
    ++attempts;
    Eigen::MatrixXd b(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = nd(g);
    Eigen::MatrixXd M = b * b.transpose();
    M *= 0.3 * unif(g) / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().maxCoeff();
    Eigen::MatrixXd pts(m, 1);
    for (int i = 0; i < m; ++i) pts(i, 0) = i;
    const auto dk = dpp::DiscretizedKernel::from_matrix(pts, Eigen::VectorXd::Ones(m), M, alpha);
    Eigen::VectorXd phi(m);
    for (int i = 0; i < m; ++i) phi(i) = unif(g);
    const cd u(0.4 * unif(g) - 0.1, 0.6 * unif(g) - 0.3);
    dpp::SeriesCheck r;
    try {
      r = dpp::fredholm_series_check(dk, phi, u, alpha, 6);
    } catch (const DomainError&) {
      continue;  // ‖αJ‖ ≥ 1: outside the expansion's domain
    }
    if (!(r.tail_bound < 1e-9)) continue;  // truncation at order 6 not yet converged
    ++accepted;
    // Det[I − αJ]^{−1/α} from a dense determinant, J = (e^{−uφ} − 1)·M
    Eigen::MatrixXcd J(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) J(i, j) = (std::exp(-u * phi(i)) - 1.0) * M(i, j);
    const cd det = (Eigen::MatrixXcd::Identity(m, m) - alpha * J).determinant();
    const cd direct = std::exp(-std::log(det) / alpha);
    worst = std::max(worst, r.abs_diff);
    worst_det = std::max(worst_det, std::abs(r.series - direct));
  }
  return {accepted == 20 && worst < 1e-8 && worst_det < 1e-8,
          fmt("%d instances (%d drawn); max |series - eigen| %.2e, max |series - det^(-1/alpha)| %.2e", accepted,
              attempts, worst, worst_det)};
}

// ---- 3 ---------------------------------------------------------------------

spin::SpinModel ising(int d, int side, double J, double h, double beta, bool periodic = false) {
  return spin::make_model(d, side, spin::SpinMeasure::ising(), {J, 0, 0}, {h, 0, 0}, beta, periodic);
}

Outcome lee_yang() {
  std::vector<spin::SpinModel> ferro;
  for (int n = 1; n <= 9; ++n) ferro.push_back(ising(1, n, 0.3 + 0.1 * n, 0.05 * n, 0.6));
  ferro.push_back(ising(2, 2, 1.0, 0.5, 0.8));
  ferro.push_back(ising(2, 3, 1.0, 0.1, 0.4));
  ferro.push_back(ising(1, 6, 0.7, 0.0, 1.3, true));
  double worst = 0.0;
  bool counts = true;
  for (const auto& m : ferro) {
    const auto rep = spin::lee_yang_zeros(m);
    counts = counts && rep.fugacity_zeros.size() == static_cast<std::size_t>(m.sites());
    for (const auto& z : rep.fugacity_zeros) worst = std::max(worst, std::abs(std::abs(z) - 1.0));
  }
  // J = −1, β = 1, two sites: e^{−1}z² + 2e·z + e^{−1} has real roots −e²(1 ± √(1 − e^{−4}))
  const auto af = spin::lee_yang_zeros(ising(1, 2, -1.0, 0.0, 1.0));
  const double big = std::exp(2.0) * (1 + std::sqrt(1 - std::exp(-4.0)));
  double found = 0.0;
  for (const auto& z : af.fugacity_zeros) found = std::max(found, std::abs(z));
  const bool control = std::abs(found - big) < 1e-8 * big && af.max_abs_deviation_from_unit_circle > 0.5;
  return {counts && worst < 1e-8 && control,
          fmt("%zu ferromagnets (1..9 sites): max ||z|-1| %.2e; antiferromagnet root %.6f (expected %.6f)",
              ferro.size(), worst, found, big)};
}

// ---- 4 ---------------------------------------------------------------------

/// Per-site quadrature: spin vectors (3 components) with weights.
struct Nodes {
  std::vector<std::array<double, 3>> s;
  std::vector<double> w;
};

Nodes site_quadrature(const spin::SpinMeasure& mu) {
  Nodes q;
  switch (mu.kind) {
    case spin::MeasureKind::Ising:
    case spin::MeasureKind::Atomic:
      for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        q.s.push_back({mu.atoms[i], 0, 0});
        q.w.push_back(mu.weights[i]);
      }
      break;
    case spin::MeasureKind::Circle: {
      const int n = 48;  // trapezoid: spectral for periodic analytic integrands
      for (int k = 0; k < n; ++k) {
        const double t = 2 * pi * k / n;
        q.s.push_back({std::cos(t), std::sin(t), 0});
        q.w.push_back(1.0 / n);
      }
      break;
    }
    case spin::MeasureKind::Sphere: {
      // Gauss-Legendre in cos θ (Golub-Welsch) times trapezoid in φ
      const int nt = 24, np = 48;
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nt, nt);
      for (int k = 1; k < nt; ++k) T(k, k - 1) = T(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      for (int i = 0; i < nt; ++i) {
        const double c = es.eigenvalues()(i), wc = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
        const double sn = std::sqrt(1 - c * c);
        for (int k = 0; k < np; ++k) {
          const double p = 2 * pi * k / np;
          // e₁ is the polar axis
          q.s.push_back({c, sn * std::cos(p), sn * std::sin(p)});
          q.w.push_back(wc / np);
        }
      }
      break;
    }
  }
  return q;
}

/// E[e^{iuS}], S = Σ σ_x¹, by summing the Gibbs weight over the product grid.
cd gibbs_charfn_oracle(const spin::SpinModel& m, double u) {
  const Nodes q = site_quadrature(m.measure);
  const int n = m.sites();
  std::vector<int> pick(n, 0);
  cd num = 0.0;
  double den = 0.0;
  // depth-first over sites; each edge is charged when its later endpoint is placed
  std::function<void(int, double, double, double)> rec = [&](int x, double energy, double S, double weight) {
    for (std::size_t k = 0; k < q.s.size(); ++k) {
      pick[x] = static_cast<int>(k);
      double e = energy;
      for (int c = 0; c < 3; ++c) e -= m.field[x][c].real() * q.s[k][c];
      for (std::size_t ed = 0; ed < m.lattice.edges.size(); ++ed) {
        const auto [a, b] = m.lattice.edges[ed];
        const int other = a == x ? b : (b == x ? a : -1);
        if (other < 0 || other >= x) continue;
        for (int c = 0; c < 3; ++c) e -= m.couplings[ed][c] * q.s[k][c] * q.s[pick[other]][c];
      }
      const double s1 = S + q.s[k][0], w = weight * q.w[k];
      if (x + 1 < n) {
        rec(x + 1, e, s1, w);
        continue;
      }
      const double wt = w * std::exp(-m.beta * e);
      den += wt;
      num += wt * std::exp(cd(0.0, u * s1));
    }
  };
  rec(0, 0.0, 0.0, 1.0);
  return num / den;
}

Outcome partition_ratio() {
  using spin::make_model;
  using spin::SpinMeasure;
  const std::vector<spin::SpinModel> models{
      ising(1, 5, 1.0, 0.2, 0.7),
      ising(2, 3, 0.5, 0.1, 0.4),
      ising(1, 6, 0.8, 0.3, 0.5, true),
      make_model(1, 4, SpinMeasure::atomic({-1.5, 0, 1.5}, {1, 2, 1}), {0.6, 0, 0}, {0.3, 0, 0}, 0.8),
      make_model(1, 2, SpinMeasure::circle(), {1.0, 0.5, 0}, {0.2, 0, 0}, 0.8),
      make_model(1, 3, SpinMeasure::circle(), {1.0, 0.5, 0}, {0.2, 0, 0}, 0.8),
      make_model(2, 2, SpinMeasure::circle(), {0.7, 0.2, 0}, {0.4, 0, 0}, 0.6),
      make_model(1, 3, SpinMeasure::circle(), {0.5, 0.5, 0}, {0.0, 0, 0}, 1.0, true),
      make_model(1, 2, SpinMeasure::sphere(), {1.0, 0.5, 0.3}, {0.5, 0, 0}, 0.7),
      make_model(1, 2, SpinMeasure::sphere(), {0.6, 0.6, 0.6}, {0.1, 0, 0}, 1.0),
  };
  double worst = 0.0;
  int evals = 0;
  for (const auto& m : models)
    for (double u : {0.37, 1.2, -2.5}) {
      worst = std::max(worst, std::abs(spin::total_spin_charfn(m, u) - gibbs_charfn_oracle(m, u)));
      ++evals;
    }
  return {worst < 1e-10,
          fmt("10 models (Ising, atomic, XY, Heisenberg), %d evaluations: max |Z-ratio - Gibbs sum| %.2e", evals,
              worst)};
}

// ---- 5 ---------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// sup |F − Φ| for the standardized Rademacher sum of n terms.
double rademacher_ks(int n) {
  double F = 0.0, worst = 0.0;
  double logc = -n * std::log(2.0);  // log C(n,0) 2^{−n}
  for (int k = 0; k <= n; ++k) {
    const double x = (2.0 * k - n) / std::sqrt(double(n));
    const double Phi = normal_cdf(x);
    worst = std::max(worst, std::abs(F - Phi));
    F += std::exp(logc);
    worst = std::max(worst, std::abs(F - Phi));
    logc += std::log(double(n - k)) - std::log(double(k + 1));
  }
  return worst;
}

Outcome berry_esseen_rate() {
  const auto rep = harness::run(harness::Config::parse(
      "kind = iid_rate\nseed = 20240611\niid.base = rademacher\niid.n = 16..4096\niid.samples = 1000000\n"));
  std::string why;
  if (!rows_ok(rep, why)) return {false, why};
  const auto n = rep.series("n"), ks = rep.series("empirical_ks"), exact = rep.series("exact_ks");
  double exact_err = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i)
    exact_err = std::max(exact_err, std::abs(exact[i] - rademacher_ks(static_cast<int>(n[i]))));
  const double slope = loglog_slope(n, ks), exact_slope = loglog_slope(n, exact);
  const bool bound = gate_passed(rep, "calibrated bound holds");
  return {slope >= -0.65 && slope <= -0.40 && bound && exact_err < 1e-12 && rep.rows.size() == 9,
          fmt("n = 16..4096, 1e6 samples: empirical KS slope %.3f, exact KS slope %.3f (oracle err %.1e), "
              "calibrated A = %.3g, bound holds: %s",
              slope, exact_slope, exact_err, rep.summary.value("A_calibrated", std::nan("")), bound ? "yes" : "no")};
}

// ---- 6 ---------------------------------------------------------------------

/// Var(S) for the open Ising chain by transfer matrices with a source term.
double ising_chain_variance(int n, double beta, double J, double h) {
  auto logZ = [&](double t) {
    // Z(t) = Σ exp(β J Σσσ' + (βh + t) Σσ)
    Eigen::Matrix2d T;
    const double s[2] = {-1.0, 1.0};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) T(a, b) = std::exp(beta * J * s[a] * s[b] + 0.5 * (beta * h + t) * (s[a] + s[b]));
    Eigen::Vector2d v(std::exp(-0.5 * (beta * h + t)), std::exp(0.5 * (beta * h + t)));
    double log_scale = 0.0;
    Eigen::Vector2d cur = v;
    for (int i = 1; i < n; ++i) {
      cur = T * cur;
      const double s0 = cur.sum();
      log_scale += std::log(s0);
      cur /= s0;
    }
    return log_scale + std::log(cur.dot(v));
  };
  const double e = 1e-3;
  return (logZ(e) - 2 * logZ(0.0) + logZ(-e)) / (e * e);
}

Outcome spin_clt() {
  const auto rep = harness::run(harness::Config::parse(
      "kind = spin_clt\nseed = 7\nspin.dim = 1\nspin.measure = ising\nspin.beta = 0.5\nspin.h = 0.2\n"
      "spin.J = 1\nspin.sides = 64,256,1024\nmc.target_ess = 10000\n"));
  std::string why;
  if (!rows_ok(rep, why)) return {false, why};
  const auto sites = rep.series("sites"), var = rep.series("variance"), ks = rep.series("empirical_ks"),
             ess = rep.series("ess");
  const double vslope = loglog_slope(sites, var), kslope = loglog_slope(sites, ks);
  const bool ess_ok = std::all_of(ess.begin(), ess.end(), [](double e) { return e >= 1e4; });
  const bool decreasing = ks[0] > ks[1] && ks[1] > ks[2];
  std::string oracle;
  for (std::size_t i = 0; i < sites.size(); ++i)
    oracle += fmt(" %.0f:%.3f/%.3f", sites[i], var[i] / sites[i],
                  ising_chain_variance(static_cast<int>(sites[i]), 0.5, 1.0, 0.2) / sites[i]);
  return {vslope >= 0.85 && vslope <= 1.15 && decreasing && kslope >= -0.8 && kslope <= -0.3 && ess_ok,
          fmt("variance exponent %.3f, KS %.4f > %.4f > %.4f exponent %.3f, min ESS %.0f; Var/site MC/exact:",
              vslope, ks[0], ks[1], ks[2], kslope, *std::min_element(ess.begin(), ess.end())) +
              oracle};
}

// ---- 7 ---------------------------------------------------------------------

Outcome dpp_variance() {
  const auto gauss = harness::run(harness::Config::parse(
      "kind = dpp_variance\ndpp.kernel = gaussian\ndpp.dim = 1\ndpp.alpha = 1\ndpp.phi = bump\ndpp.L = 4,8,16,32\n"));
  const auto ball = harness::run(harness::Config::parse(
      "kind = dpp_variance\ndpp.kernel = ball_fourier\ndpp.dim = 2\ndpp.alpha = -1\ndpp.phi = bump\n"
      "dpp.L = 4,8,16,32\n"));
  std::string why;
  if (!rows_ok(gauss, why) || !rows_ok(ball, why)) return {false, why};
  const double g = loglog_slope(gauss.series("L"), gauss.series("variance"));
  const double b = loglog_slope(ball.series("L"), ball.series("variance"));
  // predicted: d = 1 for the short-range permanental kernel; 2(d − β) = 1 for d = 2, β = 3/2
  return {std::abs(g - 1.0) <= 0.2 && std::abs(b - 1.0) <= 0.2,
          fmt("gaussian alpha=+1 d=1: exponent %.3f (predicted 1); ball-Fourier alpha=-1 d=2: exponent %.3f "
              "(predicted 1)",
              g, b)};
}

// ---- 8 ---------------------------------------------------------------------

Outcome zero_free_uniformity() {
  const auto rep = harness::run(harness::Config::parse(
      "kind = dpp_clt\ndpp.kernel = gaussian\ndpp.dim = 1\ndpp.alpha = -1\ndpp.phi = indicator\n"
      "dpp.L = 8,16,32,64\ndpp.zero_scan = true\n"));
  std::string why;
  if (!rows_ok(rep, why)) return {false, why};
  const auto radii = rep.series("zero_free_radius"), cert = rep.series("radius_certified");
  const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
  const double spread = (*hi - *lo) / *lo;
  const bool certified = std::all_of(cert.begin(), cert.end(), [](double c) { return c == 1.0; });
  return {spread < 0.2 && certified,
          fmt("radii %.6f .. %.6f over L = 8..64, relative spread %.2e, certified: %s", *lo, *hi, spread,
              certified ? "all" : "no")};
}

// ---- 9 ---------------------------------------------------------------------

Outcome normality_proxy() {
  const auto rep = harness::run(harness::Config::parse(
      "kind = dpp_clt\ndpp.kernel = gaussian\ndpp.dim = 1\ndpp.alpha = -1\ndpp.phi = bump\n"
      "dpp.L = 8,16,32,64,128\ndpp.zero_scan = false\n"));
  const auto pois = harness::run(harness::Config::parse(
      "kind = dpp_clt\ndpp.kernel = gaussian\ndpp.dim = 1\ndpp.alpha = 0\ndpp.phi = indicator\n"
      "dpp.L = 2,4,8,16\ndpp.zero_scan = false\n"));
  std::string why;
  if (!rows_ok(rep, why) || !rows_ok(pois, why)) return {false, why};
  const auto sk = rep.series("skewness");
  bool decreasing = true;
  for (std::size_t i = 1; i < sk.size(); ++i) decreasing = decreasing && sk[i] < sk[i - 1];
  // Poisson with intensity λ = K(x,x) = 0.5/√π on [−L, L]: κ₃/σ³ = (λ·2L)^{−1/2}
  const double lambda = 0.5 / std::sqrt(pi);
  double perr = 0.0;
  const auto Ls = pois.series("L"), psk = pois.series("skewness");
  for (std::size_t i = 0; i < Ls.size(); ++i) perr = std::max(perr, std::abs(psk[i] - 1.0 / std::sqrt(lambda * 2 * Ls[i])));
  return {decreasing && sk.back() < 0.1 && perr < 1e-8,
          fmt("bump, alpha=-1, L = 8..128: skewness %.4f -> %.4f (decreasing: %s); Poisson max err %.2e", sk.front(),
              sk.back(), decreasing ? "yes" : "no", perr)};
}

// ---- 10 --------------------------------------------------------------------

Outcome decay_audit() {
  const auto params = dpp::ball_fourier_decay_params(2);
  const auto ball = dpp::kernel_decay_check(dpp::ball_fourier_kernel(2, -1.0, 1.0), params);
  const auto gauss = dpp::kernel_decay_check(dpp::gaussian_kernel(2), params);
  // the constants themselves, as stated for d = 2
  const double beta = 1.5, r = 2 * pi, c1 = 2 * pi / (4 * std::sqrt(pi)), c2 = (2 * pi / 3) / (4 * pi);
  const bool constants = std::abs(params.decay_beta - beta) < 1e-15 && std::abs(params.r - r) < 1e-15 &&
                         std::abs(params.c1 - c1) < 1e-15 && std::abs(params.c2 - c2) < 1e-15;
  double min_frac = 1.0;
  for (const auto& a : ball.annuli) min_frac = std::min(min_frac, a.fraction);
  return {ball.iib_pass && !gauss.iib_pass && constants,
          fmt("ball-Fourier d=2: %s (min annulus fraction %.3f vs c2 = %.3f, %zu annuli); gaussian: %s",
              ball.iib_pass ? "passes" : "fails", min_frac, c2, ball.annuli.size(),
              gauss.iib_pass ? "passes" : "fails")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    Outcome (*fn)();
  };
  const std::vector<Criterion> all{
      {1, "alpha-determinant oracle equivalence", 10, alpha_det_oracles},
      {2, "Fredholm series identity", 60, fredholm_identity},
      {3, "Lee-Yang circle", 60, lee_yang},
      {4, "partition-ratio identity", 300, partition_ratio},
      {5, "Berry-Esseen rate at desk scale", 900, berry_esseen_rate},
      {6, "spin CLT scaling", 1800, spin_clt},
      {7, "DPP variance scaling", 600, dpp_variance},
      {8, "DPP zero-free uniformity", 600, zero_free_uniformity},
      {9, "DPP normality proxy", 600, normality_proxy},
      {10, "kernel decay audit", 300, decay_audit},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  [%d] %s: %s; %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " OVER TIME");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
