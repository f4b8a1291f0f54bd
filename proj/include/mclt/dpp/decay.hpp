#ifndef MCLT_DPP_DECAY_HPP
#define MCLT_DPP_DECAY_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "mclt/dpp/kernel.hpp"
#include "mclt/numeric/quadrature.hpp"
#include "mclt/numeric/random.hpp"
#include "mclt/numeric/stats.hpp"

namespace mclt::dpp {

struct DecayParams {
  // (ii.b): |K(x,y)| ≥ c1‖x−y‖^{−decay_beta} on a c2-fraction of each annulus
  double decay_beta = 1.0;
  double r = 1.0;
  double c1 = 1.0;
  double c2 = 0.1;
  int n0 = 1;
  int n_max = 40;
  // (ii.a): |K(x,y)| ≥ a for ‖x−y‖ < delta; skipped when delta ≤ 0
  double a = 0.0;
  double delta = 0.0;
  int centers = 4;
  double center_box = 10.0;  // centers drawn from [−box, box]^d
  int samples = 20000;       // Monte Carlo points per annulus and center
  std::uint64_t seed = 1;
};

struct AnnulusResult {
  int n = 0;
  double fraction = 0.0;  // min over centers of Vol(E_x ∩ A_n)/Vol(A_n)
  double std_error = 0.0;
  bool pass = false;
};

struct DecayReport {
  std::vector<AnnulusResult> annuli;
  bool iib_pass = false;
  std::optional<bool> iia_pass;
  double iia_min_value = 0.0;
  // tail integral I(R) = ∫_{‖x−y‖>R} K(x,y)² dy against c₃R^{d−2β}
  std::vector<double> R;
  std::vector<double> tail_integral;
  double c3 = 0.0;
  double tail_slope = 0.0;
  double predicted_slope = 0.0;
  bool integral_pass = false;
};

namespace detail {

/// Uniform point in the shell ρ_lo ≤ ‖y − x‖ ≤ ρ_hi.
inline std::vector<double> shell_point(Xoshiro256pp& g, std::span<const double> x, double lo, double hi) {
  const int d = static_cast<int>(x.size());
  std::normal_distribution<double> nd;
  std::vector<double> dir(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : dir) {
      v = nd(g);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  const double lo_d = std::pow(lo, d), hi_d = std::pow(hi, d);
  const double rho = std::pow(lo_d + g.uniform() * (hi_d - lo_d), 1.0 / d);
  std::vector<double> y(d);
  for (int i = 0; i < d; ++i) y[i] = x[i] + rho * dir[i] / norm;
  return y;
}

inline double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

}  // namespace detail

/// Monte Carlo check of the annulus condition (ii.b) at random centers, the
/// near-diagonal condition (ii.a) when requested, and the tail integral
/// lower bound ∫_{‖x−y‖>R}K² ≥ c₃R^{d−2β} (radial kernels only; the integral
/// is truncated at 64·R_max, so the fitted c₃ is conservative).
inline DecayReport kernel_decay_check(const KernelSpec& k, const DecayParams& p) {
  if (k.dim < 1 || !k.kernel) throw ArgumentError("kernel_decay_check: kernel not evaluable");
  if (p.n0 < 0 || p.n_max < p.n0 || !(p.r > 0.0) || p.samples < 1 || p.centers < 1)
    throw ArgumentError("kernel_decay_check: bad annulus parameters");
  const int d = k.dim;
  DecayReport rep;
  Xoshiro256pp g(p.seed);
  std::vector<std::vector<double>> centers(p.centers, std::vector<double>(d));
  for (auto& c : centers)
    for (double& v : c) v = (2.0 * g.uniform() - 1.0) * p.center_box;

  rep.iib_pass = true;
  for (int n = p.n0; n <= p.n_max; ++n) {
    AnnulusResult a;
    a.n = n;
    a.fraction = 1.0;
    for (const auto& x : centers) {
      int hit = 0;
      for (int s = 0; s < p.samples; ++s) {
        const auto y = detail::shell_point(g, x, n * p.r, (n + 1) * p.r);
        const double dist = distance(x, y);
        if (dist > 0.0 && std::abs(k(x, y)) >= p.c1 * std::pow(dist, -p.decay_beta)) ++hit;
      }
      const double f = static_cast<double>(hit) / p.samples;
      if (f < a.fraction) {
        a.fraction = f;
        a.std_error = std::sqrt(f * (1.0 - f) / p.samples);
      }
    }
    a.pass = a.fraction >= p.c2;
    rep.iib_pass = rep.iib_pass && a.pass;
    rep.annuli.push_back(a);
  }

  if (p.delta > 0.0) {
    bool ok = true;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& x : centers)
      for (int s = 0; s < p.samples; ++s) {
        const auto y = detail::shell_point(g, x, 0.0, p.delta * (1.0 - 1e-12));
        const double v = std::abs(k(x, y));
        lo = std::min(lo, v);
        if (v < p.a) ok = false;
      }
    rep.iia_pass = ok;
    rep.iia_min_value = lo;
  }

  rep.predicted_slope = d - 2.0 * p.decay_beta;
  if (k.radial()) {
    const double r_min = std::max(p.r, (p.n0 + 1) * p.r);
    const double r_max = std::max(2.0 * r_min, (p.n_max + 1) * p.r);
    const double outer = 64.0 * r_max;
    const double area = detail::sphere_area(d);
    // panels one oscillation period wide keep the Gauss rule accurate
    auto shell = [&](double a, double b) {
      const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / (0.5 * k.scale))));
      const auto q = composite_gauss_legendre(8, panels, a, b);
      double s = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double v = k.profile(q.nodes[i]);
        s += q.weights[i] * v * v * std::pow(q.nodes[i], d - 1);
      }
      return area * s;
    };
    const int points = 8;
    std::vector<double> Rs;
    for (int i = 0; i < points; ++i) Rs.push_back(r_min * std::pow(r_max / r_min, i / (points - 1.0)));
    double acc = shell(Rs.back(), outer);
    std::vector<double> vals(points);
    vals[points - 1] = acc;
    for (int i = points - 2; i >= 0; --i) {
      acc += shell(Rs[i], Rs[i + 1]);
      vals[i] = acc;
    }
    rep.R = Rs;
    rep.tail_integral = vals;
    rep.c3 = std::numeric_limits<double>::infinity();
    bool positive = true;
    for (int i = 0; i < points; ++i) {
      positive = positive && vals[i] > 0.0;
      rep.c3 = std::min(rep.c3, vals[i] / std::pow(Rs[i], rep.predicted_slope));
    }
    if (positive) {
      rep.tail_slope = loglog_fit(Rs, vals).slope;
      rep.integral_pass = rep.c3 > 0.0 && rep.tail_slope >= rep.predicted_slope - 0.25;
    } else {
      rep.c3 = 0.0;
      rep.tail_slope = -std::numeric_limits<double>::infinity();
    }
  }
  return rep;
}

/// Example constants for the ball-Fourier kernel with amplitude 1: β =
/// (d+1)/2, r = 2π, c₁ = (2π)^{d/2}/(4π^{1/2}), c₂ = (b−a)/(2^dπ) with
/// [a, b] = [π(d+1)/4 − π/3, π(d+1)/4 + π/3] where cos(t − (d+1)π/4) ≥ 1/2.
inline DecayParams ball_fourier_decay_params(int d) {
  DecayParams p;
  p.decay_beta = 0.5 * (d + 1);
  p.r = 2.0 * std::numbers::pi;
  p.c1 = std::pow(2.0 * std::numbers::pi, 0.5 * d) / (4.0 * std::sqrt(std::numbers::pi));
  p.c2 = (2.0 * std::numbers::pi / 3.0) / (std::pow(2.0, d) * std::numbers::pi);
  p.n0 = 1;
  p.n_max = 40;
  return p;
}

}  // namespace mclt::dpp

#endif  // MCLT_DPP_DECAY_HPP
