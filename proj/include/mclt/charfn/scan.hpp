#ifndef MCLT_CHARFN_SCAN_HPP
#define MCLT_CHARFN_SCAN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "mclt/charfn/model.hpp"
#include "mclt/numeric/optimize.hpp"
#include "mclt/numeric/parallel.hpp"

namespace mclt {

struct DiskScanReport {
  double radius_scanned = 0.0;
  double zero_free_radius = 0.0;
  double min_modulus = 1.0;
  cplx argmin_point = 0.0;
  std::vector<std::pair<double, int>> winding_numbers;
  bool certified = false;
  /// Nearest zero located by Newton refinement, if any was found.
  std::optional<cplx> nearest_zero;
};

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a;
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// log Ψ(t) = log E[e^{itX}].
inline cplx log_psi(const CharFnModel& m, cplx t) { return m.log_evaluator(cplx(0.0, 1.0) * t); }

struct CircleScan {
  double radius = 0.0;
  int winding = 0;
  bool winding_ok = true;
  double min_log_mod = std::numeric_limits<double>::infinity();
  double max_log_mod = -std::numeric_limits<double>::infinity();
  cplx argmin = 0.0;
  std::vector<double> angles;
  std::vector<double> log_mods;
};

/// (log Ψ)'(t) by a central difference of exp-ratios (branch independent).
inline cplx log_psi_derivative(const CharFnModel& m, cplx t, cplx l0) {
  const double h = 1e-6 * std::max(1.0, std::abs(t));
  return (std::exp(log_psi(m, t + h) - l0) - std::exp(log_psi(m, t - h) - l0)) / (2.0 * h);
}

/// Samples Ψ on |t| = r, refining each arc until the argument moves by less
/// than π/2 between neighbours, and returns the winding number. An arc is
/// also split when the wrapped increment disagrees with the increment
/// predicted by the log-derivative, which catches a full turn hidden
/// between two samples near a (possibly multiple) zero.
inline CircleScan scan_circle(const CharFnModel& m, double r, int n0, int max_depth = 24) {
  CircleScan cs;
  cs.radius = r;
  struct Sample {
    double theta;
    cplx l, dl;
  };
  auto sample = [&](double theta) {
    const cplx t = std::polar(r, theta);
    const cplx l = log_psi(m, t);
    return Sample{theta, l, std::isfinite(l.real()) ? log_psi_derivative(m, t, l) : cplx(0.0)};
  };
  std::vector<Sample> base(n0);
  for (int k = 0; k < n0; ++k) base[k] = sample(kTwoPi * k / n0);
  auto note = [&](const Sample& s) {
    const double lm = std::isnan(s.l.real()) ? -std::numeric_limits<double>::infinity() : s.l.real();
    cs.angles.push_back(s.theta);
    cs.log_mods.push_back(lm);
    if (lm < cs.min_log_mod) {
      cs.min_log_mod = lm;
      cs.argmin = std::polar(r, s.theta);
    }
    if (lm > cs.max_log_mod) cs.max_log_mod = lm;
  };
  double total = 0.0;
  struct Arc {
    Sample a, b;
    int depth;
  };
  for (int k = 0; k < n0; ++k) {
    Sample end = base[(k + 1) % n0];
    if (k + 1 == n0) end.theta = kTwoPi;
    std::vector<Arc> stack{{base[k], end, 0}};
    note(base[k]);
    while (!stack.empty()) {
      const Arc arc = stack.back();
      stack.pop_back();
      if (!std::isfinite(arc.a.l.real()) || !std::isfinite(arc.b.l.real())) {
        cs.winding_ok = false;
        continue;
      }
      const double d = wrap_angle(arc.b.l.imag() - arc.a.l.imag());
      const cplx chord = std::polar(r, arc.b.theta) - std::polar(r, arc.a.theta);
      const double predicted = (0.5 * (arc.a.dl + arc.b.dl) * chord).imag();
      const bool smooth = std::abs(d) < std::numbers::pi / 2 && std::abs(predicted - d) < std::numbers::pi / 4;
      if (smooth || arc.depth >= max_depth) {
        if (!smooth) cs.winding_ok = false;
        total += d;
        continue;
      }
      const Sample mid = sample(0.5 * (arc.a.theta + arc.b.theta));
      note(mid);
      stack.push_back({mid, arc.b, arc.depth + 1});
      stack.push_back({arc.a, mid, arc.depth + 1});
    }
  }
  cs.winding = static_cast<int>(std::lround(total / kTwoPi));
  return cs;
}

/// Points of a scanned circle where the sampled |Ψ| is a local minimum.
inline std::vector<cplx> circle_local_minima(const CircleScan& c) {
  std::vector<std::size_t> order(c.angles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return c.angles[a] < c.angles[b]; });
  std::vector<cplx> out;
  const std::size_t n = order.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = c.log_mods[order[(i + n - 1) % n]];
    const double cur = c.log_mods[order[i]];
    const double next = c.log_mods[order[(i + 1) % n]];
    if (cur <= prev && cur <= next) out.push_back(std::polar(c.radius, c.angles[order[i]]));
  }
  return out;
}

/// Newton iteration for a zero of Ψ, using Ψ/Ψ' = 1/(log Ψ)'. The log
/// derivative is taken from ratios exp(L(t±h) − L(t)), so the branch of
/// the stored logarithm never matters. Linear convergence (a multiple zero)
/// is detected from the step ratio and corrected by the implied multiplicity.
inline std::optional<cplx> newton_zero(const CharFnModel& m, cplx t, double bound) {
  double prev_step = std::numeric_limits<double>::infinity();
  double h = 1e-6 * std::max(1.0, std::abs(t));
  double mult = 1.0;
  int stable = 0;
  for (int it = 0; it < 200; ++it) {
    const double scale = std::max(1.0, std::abs(t));
    const cplx l0 = log_psi(m, t);
    if (!std::isfinite(l0.real())) return t;  // landed on the zero exactly
    const cplx dl = (std::exp(log_psi(m, t + h) - l0) - std::exp(log_psi(m, t - h) - l0)) / (2.0 * h);
    if (!std::isfinite(dl.real()) || dl == cplx(0.0)) return std::nullopt;
    cplx step = 1.0 / dl;
    const double q = std::abs(step) / prev_step;
    if (mult == 1.0 && q > 0.3 && q < 0.99) {
      if (++stable >= 3) mult = std::round(1.0 / (1.0 - q));
    } else {
      stable = 0;
    }
    prev_step = std::abs(step);
    step *= mult;
    if (std::abs(step) > 0.25 * std::max(1.0, bound)) step *= 0.25 * std::max(1.0, bound) / std::abs(step);
    t -= step;
    if (std::abs(t) > 2.0 * bound + 1.0) return std::nullopt;
    if (std::abs(step) < 1e-13 * scale) return t;
    h = std::clamp(0.01 * std::abs(step), 1e-12 * scale, 1e-6 * scale);
  }
  if (prev_step * mult < 1e-8 * std::max(1.0, std::abs(t))) return t;
  return std::nullopt;
}

}  // namespace detail

/// max_{|t|=r} |Ψ(t)| in log form: 256 equispaced angles, then golden-section
/// refinement around the best one.
inline std::pair<double, double> circle_log_max(const CharFnModel& m, double r,
                                                std::size_t jobs = 0) {
  constexpr int kAngles = 256;
  std::vector<double> lm(kAngles);
  parallel_for(kAngles, jobs, [&](std::size_t k) {
    lm[k] = detail::log_psi(m, std::polar(r, detail::kTwoPi * k / kAngles)).real();
  });
  const auto best = static_cast<int>(std::max_element(lm.begin(), lm.end()) - lm.begin());
  const double th0 = detail::kTwoPi * best / kAngles, dth = detail::kTwoPi / kAngles;
  const auto opt = golden_section_max(
      [&](double th) { return detail::log_psi(m, std::polar(r, th)).real(); }, th0 - dth, th0 + dth,
      1e-10);
  if (opt.value >= lm[best]) return {opt.value, opt.x};
  return {lm[best], th0};
}

/// Scans Ψ on the disk |t| ≤ r_max for zeros. Circles are spaced grid_step
/// apart; a point counts as a zero when |Ψ| < tol·(1 + max on its circle).
inline DiskScanReport zero_free_radius(const CharFnModel& m, double r_max, double grid_step,
                                       double tol = 1e-9, std::size_t jobs = 0,
                                       bool stop_at_first_zero = false) {
  if (!(grid_step > 0.0)) throw ArgumentError("zero_free_radius: grid_step must be positive");
  if (!(r_max > 0.0)) throw ArgumentError("zero_free_radius: r_max must be positive");
  if (r_max > m.validity_radius)
    throw DomainError("zero_free_radius: r_max exceeds the model's validity radius");

  int n_circles = static_cast<int>(std::ceil(r_max / grid_step - 1e-12));
  std::vector<detail::CircleScan> circles(n_circles);
  auto scan_range = [&](int from, int to) {
    parallel_for(to - from, jobs, [&](std::size_t k) {
      const int j = from + static_cast<int>(k);
      const double r = std::min(r_max, (j + 1) * grid_step);
      const int n0 = std::max(64, static_cast<int>(std::ceil(detail::kTwoPi * r / grid_step)));
      circles[j] = detail::scan_circle(m, r, n0);
    });
  };

  DiskScanReport rep;
  rep.radius_scanned = r_max;
  auto is_zero = [&](const detail::CircleScan& c) {
    return c.min_log_mod < std::log(tol) + detail::softplus(c.max_log_mod) ||
           !std::isfinite(c.min_log_mod);
  };

  // Nonzero winding proves a zero inside; a small modulus alone is only a
  // candidate and must be confirmed by converging onto an actual root.
  auto confirmed_zero = [&](const detail::CircleScan& c) {
    const auto z = detail::newton_zero(m, c.argmin, c.radius);
    if (!z || std::abs(*z) > c.radius + grid_step) return false;
    const cplx lz = detail::log_psi(m, *z);
    return !std::isfinite(lz.real()) ||
           lz.real() < std::log(tol) + detail::softplus(c.max_log_mod);
  };
  // Circles beyond a zero can be costly (many zeros nearby); with
  // stop_at_first_zero they are scanned in batches and dropped past the
  // first bad one, which keeps the report independent of the batch size.
  auto bad = [&](const detail::CircleScan& c) {
    return c.winding != 0 || !c.winding_ok || (is_zero(c) && confirmed_zero(c));
  };
  if (!stop_at_first_zero) {
    scan_range(0, n_circles);
  } else {
    const int batch = static_cast<int>(jobs == 0 ? default_jobs() : jobs);
    for (int from = 0; from < n_circles; from += batch) {
      const int to = std::min(n_circles, from + batch);
      scan_range(from, to);
      int hit = -1;
      for (int j = from; j < to && hit < 0; ++j)
        if (bad(circles[j])) hit = j;
      if (hit >= 0) {
        n_circles = hit + 1;
        circles.resize(n_circles);
        rep.radius_scanned = circles.back().radius;
        break;
      }
    }
  }

  int first_bad = -1;
  double global_min = 0.0;  // log modulus; Ψ(0) = 1
  for (int j = 0; j < n_circles; ++j) {
    const auto& c = circles[j];
    rep.winding_numbers.emplace_back(c.radius, c.winding);
    if (c.min_log_mod < global_min) {
      global_min = c.min_log_mod;
      rep.argmin_point = c.argmin;
    }
    if (first_bad < 0 && bad(c)) first_bad = j;
  }

  // local refinement of the smallest sample inside the disk
  if (std::isfinite(global_min) && rep.argmin_point != cplx(0.0)) {
    const auto refined = nelder_mead_min(
        [&](const std::vector<double>& p) {
          cplx t(p[0], p[1]);
          if (std::abs(t) > r_max) t *= r_max / std::abs(t);
          return detail::log_psi(m, t).real();
        },
        {rep.argmin_point.real(), rep.argmin_point.imag()}, 0.5 * grid_step, {}, {}, 1e-12, 400);
    cplx t(refined.x[0], refined.x[1]);
    if (std::abs(t) > r_max) t *= r_max / std::abs(t);
    if (refined.value < global_min) {
      global_min = refined.value;
      rep.argmin_point = t;
    }
  }
  rep.min_modulus = std::exp(global_min);

  if (first_bad < 0) {
    rep.zero_free_radius = r_max;
    rep.certified = true;
    return rep;
  }

  // A zero sits in the annulus (r_in, r_out]. Seed Newton from the local
  // minima of |Ψ| on the bounding circles and keep the smallest root.
  const double r_in = first_bad > 0 ? circles[first_bad - 1].radius : 0.0;
  const double r_out = circles[first_bad].radius;
  const double scale = detail::softplus(circles[first_bad].max_log_mod);
  double best = std::numeric_limits<double>::infinity();
  auto try_seeds = [&](const std::vector<cplx>& seeds, double bound) {
    for (const cplx& s : seeds) {
      const auto z = detail::newton_zero(m, s, bound);
      if (!z) continue;
      const cplx lz = detail::log_psi(m, *z);
      if (std::isfinite(lz.real()) && lz.real() > std::log(tol) + scale + std::log(1e3)) continue;
      if (std::abs(*z) < best) {
        best = std::abs(*z);
        rep.nearest_zero = *z;
      }
    }
  };
  std::vector<cplx> seeds;
  for (int j : {first_bad - 1, first_bad})
    if (j >= 0) {
      auto s = detail::circle_local_minima(circles[j]);
      seeds.insert(seeds.end(), s.begin(), s.end());
    }
  if (first_bad == 0) seeds.push_back(0.5 * r_out);
  try_seeds(seeds, r_out);

  auto scan_at = [&](double r) {
    const int n0 = std::max(64, static_cast<int>(std::ceil(detail::kTwoPi * r / grid_step)));
    return detail::scan_circle(m, r, n0, 40);
  };
  bool inner_ok = true;
  for (int j = 0; j < first_bad; ++j) inner_ok = inner_ok && circles[j].winding == 0 && circles[j].winding_ok;

  // certify the open disk by a winding count just inside the zero; a
  // nonzero count means a closer root was missed, so bisect the radius down
  // to the innermost winding change and reseed Newton on that circle
  bool ok = false;
  for (int attempt = 0; attempt < 8 && rep.nearest_zero && best <= r_out + grid_step; ++attempt) {
    const double r_check = best * (1.0 - 1e-6);
    if (r_check <= r_in) {
      ok = true;
      break;
    }
    const auto c = scan_at(r_check);
    if (c.winding == 0 && c.winding_ok) {
      ok = true;
      break;
    }
    double lo = r_in, hi = r_check;
    detail::CircleScan hi_scan = c;
    while (hi - lo > 1e-7 * hi) {
      const double mid = 0.5 * (lo + hi);
      auto cm = scan_at(mid);
      if (cm.winding != 0 || !cm.winding_ok) {
        hi = mid;
        hi_scan = std::move(cm);
      } else {
        lo = mid;
      }
    }
    const double before = best;
    try_seeds(detail::circle_local_minima(hi_scan), hi + grid_step);
    if (!(best < before) || best > hi) {
      // Newton keeps landing on a farther member of a zero cluster; the
      // winding bracket itself pins the innermost zero to (lo, hi]
      best = hi;
      rep.nearest_zero = hi_scan.argmin;
      ok = true;
      break;
    }
  }

  if (rep.nearest_zero && best <= r_out + grid_step) {
    rep.zero_free_radius = std::min(best, r_max);
    rep.certified = ok && inner_ok;
  } else {
    rep.zero_free_radius = r_in;
    rep.certified = true;
  }
  return rep;
}

/// Grows the scanned disk geometrically until a zero shows up, so the dense
/// zero set further out is never scanned.
inline DiskScanReport expanding_zero_scan(const CharFnModel& m, double r_start, double r_cap, int circles = 24,
                                          std::size_t jobs = 0) {
  double r = std::min(r_start, r_cap);
  for (;;) {
    auto rep = zero_free_radius(m, r, r / circles, 1e-9, jobs, true);
    if (rep.zero_free_radius < r || r >= r_cap) return rep;
    r = std::min(2.0 * r, r_cap);
  }
}

}  // namespace mclt

#endif  // MCLT_CHARFN_SCAN_HPP
